#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfcdc::sql {

// Integer values are the WikiSQL label codes.
enum class AggOp : int { kNone = 0, kMax = 1, kMin = 2, kCount = 3, kSum = 4, kAvg = 5 };
enum class CondOp : int { kEq = 0, kGt = 1, kLt = 2 };

inline constexpr int kNumAggOps = 6;
inline constexpr int kNumCondOps = 3;
inline constexpr int kMaxWhereNum = 4;

std::string_view agg_name(AggOp op);   // "" for kNone, otherwise "MAX", "MIN", ...
std::string_view cond_symbol(CondOp op);  // "=", ">", "<"
std::optional<AggOp> agg_from_code(int code);
std::optional<CondOp> cond_from_code(int code);
bool agg_requires_numeric(AggOp op);

struct Condition {
  int col = 0;
  CondOp op = CondOp::kEq;
  std::string value;

  bool operator==(const Condition&) const = default;
};

// Single-table WikiSQL query: SELECT agg(sel_col) FROM t WHERE conds[0] AND ...
struct Query {
  int sel_col = 0;
  AggOp agg = AggOp::kNone;
  std::vector<Condition> conds;

  bool operator==(const Query&) const = default;
};

}  // namespace cfcdc::sql
