#include <algorithm>

#include <omp.h>

#include "decon/kernels.hpp"

namespace decon {

int effective_threads(int requested) {
  return requested > 0 ? requested : omp_get_max_threads();
}

double dot_blocked(const float* a, const float* b, std::size_t dim) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= dim; k += 4) {
    acc0 += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    acc1 += static_cast<double>(a[k + 1]) * static_cast<double>(b[k + 1]);
    acc2 += static_cast<double>(a[k + 2]) * static_cast<double>(b[k + 2]);
    acc3 += static_cast<double>(a[k + 3]) * static_cast<double>(b[k + 3]);
  }
  for (; k < dim; ++k) acc0 += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return (acc0 + acc1) + (acc2 + acc3);
}

void group_max_parallel(const MatrixView& query_store, std::span<const std::uint32_t> query_rows,
                        const MatrixView& column_store, const ColumnGroups& groups,
                        GroupMaxTable& out, const KernelOptions& options) {
  const std::size_t n_groups = groups.groups();
  const std::size_t n_queries = query_rows.size();
  const std::size_t n_columns = groups.columns.size();
  const std::size_t dim = query_store.dim;
  out.reset(n_queries, n_groups);
  if (n_queries == 0 || n_columns == 0) return;

  std::vector<std::uint32_t> group_of(n_columns);
  for (std::size_t g = 0; g < n_groups; ++g) {
    std::fill(group_of.begin() + static_cast<std::ptrdiff_t>(groups.group_offsets[g]),
              group_of.begin() + static_cast<std::ptrdiff_t>(groups.group_offsets[g + 1]),
              static_cast<std::uint32_t>(g));
  }

  const std::size_t tile = std::max<std::size_t>(1, options.query_tile);
  const std::size_t block = std::max<std::size_t>(1, options.column_block);
  const auto n_tiles = static_cast<std::int64_t>((n_queries + tile - 1) / tile);

  // Each (query, group) cell is owned by exactly one thread and visited in
  // column order, so ties resolve identically for any thread count.
#pragma omp parallel for schedule(dynamic) num_threads(effective_threads(options.threads))
  for (std::int64_t t = 0; t < n_tiles; ++t) {
    const std::size_t q0 = static_cast<std::size_t>(t) * tile;
    const std::size_t q1 = std::min(n_queries, q0 + tile);
    for (std::size_t c0 = 0; c0 < n_columns; c0 += block) {
      const std::size_t c1 = std::min(n_columns, c0 + block);
      for (std::size_t q = q0; q < q1; ++q) {
        const float* query = query_store.row(query_rows[q]);
        double* best = out.value.data() + q * n_groups;
        std::uint32_t* best_col = out.argmax.data() + q * n_groups;
        for (std::size_t c = c0; c < c1; ++c) {
          double d = dot_blocked(query, column_store.row(groups.columns[c]), dim);
          std::uint32_t g = group_of[c];
          if (d > best[g]) {
            best[g] = d;
            best_col[g] = static_cast<std::uint32_t>(c);
          }
        }
      }
    }
  }
}

}  // namespace decon
