#pragma once

// Grouped max-similarity kernels. Every query row is compared against a list
// of column rows partitioned into contiguous groups; the result is, per
// (query, group), the max dot product and the column that attains it (first
// in column order on ties). Dot products accumulate in double.
//
// group_max_reference is the plain per-pair loop kept as the test oracle;
// group_max_parallel tiles queries and columns and spreads query tiles over
// OpenMP threads. Both write the same layout, and the parallel result does
// not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace decon {

struct MatrixView {
  const float* data = nullptr;
  std::size_t rows = 0;
  std::size_t dim = 0;

  const float* row(std::size_t r) const { return data + r * dim; }
};

struct KernelOptions {
  int threads = 0;               // 0: OpenMP default
  std::size_t query_tile = 16;   // query rows sharing one pass over a column block
  std::size_t column_block = 64; // columns kept hot in cache per pass
};

inline constexpr std::uint32_t kNoColumn = std::numeric_limits<std::uint32_t>::max();

/// Row-major queries x groups table.
struct GroupMaxTable {
  std::size_t queries = 0;
  std::size_t groups = 0;
  std::vector<double> value;          // -inf for empty groups
  std::vector<std::uint32_t> argmax;  // index into the column list, kNoColumn for empty groups

  void reset(std::size_t q, std::size_t g);
  double at(std::size_t q, std::size_t g) const { return value[q * groups + g]; }
  std::uint32_t arg(std::size_t q, std::size_t g) const { return argmax[q * groups + g]; }
};

/// Columns referenced by store row; group g spans
/// columns[group_offsets[g], group_offsets[g + 1]).
struct ColumnGroups {
  std::span<const std::uint32_t> columns;
  std::span<const std::size_t> group_offsets;  // size groups + 1

  std::size_t groups() const { return group_offsets.empty() ? 0 : group_offsets.size() - 1; }
};

double dot_reference(const float* a, const float* b, std::size_t dim);
double dot_blocked(const float* a, const float* b, std::size_t dim);

void group_max_reference(const MatrixView& query_store, std::span<const std::uint32_t> query_rows,
                         const MatrixView& column_store, const ColumnGroups& groups,
                         GroupMaxTable& out);

void group_max_parallel(const MatrixView& query_store, std::span<const std::uint32_t> query_rows,
                        const MatrixView& column_store, const ColumnGroups& groups,
                        GroupMaxTable& out, const KernelOptions& options = {});

/// Threads used for a given option value (resolves 0 to the OpenMP default).
int effective_threads(int requested);

}  // namespace decon
