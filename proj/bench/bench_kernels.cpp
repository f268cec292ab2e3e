// Serial reference against the OpenMP kernel on the Stage-1 shape: training
// images as queries, eval images grouped by benchmark as columns.

#include <benchmark/benchmark.h>

#include <random>

#include "decon/kernels.hpp"

namespace {

struct Data {
  std::size_t dim;
  std::vector<float> queries, columns;
  std::vector<std::uint32_t> query_rows, column_rows;
  std::vector<std::size_t> offsets;

  Data(std::size_t n_query, std::size_t n_col, std::size_t groups, std::size_t d) : dim(d) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> n;
    queries.resize(n_query * d);
    columns.resize(n_col * d);
    for (auto& x : queries) x = n(rng);
    for (auto& x : columns) x = n(rng);
    for (std::size_t i = 0; i < n_query; ++i) query_rows.push_back(static_cast<std::uint32_t>(i));
    for (std::size_t i = 0; i < n_col; ++i) column_rows.push_back(static_cast<std::uint32_t>(i));
    for (std::size_t g = 0; g <= groups; ++g) offsets.push_back(g * n_col / groups);
  }

  decon::MatrixView q() const { return {queries.data(), queries.size() / dim, dim}; }
  decon::MatrixView c() const { return {columns.data(), columns.size() / dim, dim}; }
  decon::ColumnGroups g() const { return {column_rows, offsets}; }
};

const Data& data() {
  static const Data d(2048, 512, 8, 768);
  return d;
}

void set_counters(benchmark::State& state) {
  const auto& d = data();
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.query_rows.size() * d.column_rows.size()));
}

void BM_reference(benchmark::State& state) {
  const auto& d = data();
  decon::GroupMaxTable t;
  for (auto _ : state) {
    decon::group_max_reference(d.q(), d.query_rows, d.c(), d.g(), t);
    benchmark::DoNotOptimize(t.value.data());
  }
  set_counters(state);
}

void BM_parallel(benchmark::State& state) {
  const auto& d = data();
  decon::GroupMaxTable t;
  const decon::KernelOptions opts{.threads = static_cast<int>(state.range(0))};
  for (auto _ : state) {
    decon::group_max_parallel(d.q(), d.query_rows, d.c(), d.g(), t, opts);
    benchmark::DoNotOptimize(t.value.data());
  }
  set_counters(state);
}

}  // namespace

BENCHMARK(BM_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
