#pragma once

#include <string>
#include <vector>

#include "cfcdc/sql/query.hpp"

namespace cfcdc::cfcc {

struct SelectItem {
  sql::AggOp agg = sql::AggOp::kNone;
  int col = 0;
  double score = 0.0;
};

struct WhereItem {
  int col = 0;
  sql::CondOp op = sql::CondOp::kEq;
  std::string value;
  double score = 0.0;
};

struct SQLComponents {
  std::vector<SelectItem> select_items;
  std::vector<WhereItem> where_items;
  int n_s = 1;
  int n_w = 0;
};

// Sorts both lists by descending score, ties by ascending column index.
void sort_components(SQLComponents& c);

struct Assembled {
  sql::Query query;
  bool clamped = false;
  std::string warning;
};

// Top-n_s select items and top-n_w where items. A single-table query keeps one
// select item, so n_s is clamped to 1; counts above the available items are
// clamped with a warning. Throws InputError when there is no select item.
Assembled assemble_sql(SQLComponents components);

}  // namespace cfcdc::cfcc
