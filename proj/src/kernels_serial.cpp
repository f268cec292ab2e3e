#include "decon/kernels.hpp"

namespace decon {

void GroupMaxTable::reset(std::size_t q, std::size_t g) {
  queries = q;
  groups = g;
  value.assign(q * g, -std::numeric_limits<double>::infinity());
  argmax.assign(q * g, kNoColumn);
}

double dot_reference(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t k = 0; k < dim; ++k) acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return acc;
}

void group_max_reference(const MatrixView& query_store, std::span<const std::uint32_t> query_rows,
                         const MatrixView& column_store, const ColumnGroups& groups,
                         GroupMaxTable& out) {
  const std::size_t n_groups = groups.groups();
  out.reset(query_rows.size(), n_groups);
  for (std::size_t q = 0; q < query_rows.size(); ++q) {
    const float* query = query_store.row(query_rows[q]);
    for (std::size_t g = 0; g < n_groups; ++g) {
      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t best_col = kNoColumn;
      for (std::size_t c = groups.group_offsets[g]; c < groups.group_offsets[g + 1]; ++c) {
        double d = dot_reference(query, column_store.row(groups.columns[c]), query_store.dim);
        if (d > best) {
          best = d;
          best_col = static_cast<std::uint32_t>(c);
        }
      }
      out.value[q * n_groups + g] = best;
      out.argmax[q * n_groups + g] = best_col;
    }
  }
}

}  // namespace decon
