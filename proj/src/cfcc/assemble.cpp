#include "cfcdc/cfcc/assemble.hpp"

#include <algorithm>

#include "cfcdc/error.hpp"

namespace cfcdc::cfcc {

void sort_components(SQLComponents& c) {
  std::stable_sort(c.select_items.begin(), c.select_items.end(), [](const SelectItem& a, const SelectItem& b) {
    return a.score != b.score ? a.score > b.score : a.col < b.col;
  });
  std::stable_sort(c.where_items.begin(), c.where_items.end(), [](const WhereItem& a, const WhereItem& b) {
    return a.score != b.score ? a.score > b.score : a.col < b.col;
  });
}

Assembled assemble_sql(SQLComponents c) {
  if (c.select_items.empty()) throw InputError("assemble_sql: no select items");
  sort_components(c);
  Assembled out;
  auto warn = [&out](const std::string& w) {
    out.clamped = true;
    if (!out.warning.empty()) out.warning += "; ";
    out.warning += w;
  };
  if (c.n_s != 1) {
    warn("n_s=" + std::to_string(c.n_s) + " clamped to 1");
    c.n_s = 1;
  }
  if (c.n_w < 0) {
    warn("n_w=" + std::to_string(c.n_w) + " clamped to 0");
    c.n_w = 0;
  }
  if (c.n_w > static_cast<int>(c.where_items.size())) {
    warn("n_w=" + std::to_string(c.n_w) + " clamped to " + std::to_string(c.where_items.size()));
    c.n_w = static_cast<int>(c.where_items.size());
  }
  out.query.sel_col = c.select_items.front().col;
  out.query.agg = c.select_items.front().agg;
  for (int i = 0; i < c.n_w; ++i) {
    const auto& w = c.where_items[static_cast<std::size_t>(i)];
    out.query.conds.push_back(sql::Condition{w.col, w.op, w.value});
  }
  return out;
}

}  // namespace cfcdc::cfcc
