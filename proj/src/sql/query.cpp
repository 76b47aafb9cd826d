#include "cfcdc/sql/query.hpp"

namespace cfcdc::sql {

std::string_view agg_name(AggOp op) {
  switch (op) {
    case AggOp::kNone: return "";
    case AggOp::kMax: return "MAX";
    case AggOp::kMin: return "MIN";
    case AggOp::kCount: return "COUNT";
    case AggOp::kSum: return "SUM";
    case AggOp::kAvg: return "AVG";
  }
  return "";
}

std::string_view cond_symbol(CondOp op) {
  switch (op) {
    case CondOp::kEq: return "=";
    case CondOp::kGt: return ">";
    case CondOp::kLt: return "<";
  }
  return "=";
}

std::optional<AggOp> agg_from_code(int code) {
  if (code < 0 || code >= kNumAggOps) return std::nullopt;
  return static_cast<AggOp>(code);
}

std::optional<CondOp> cond_from_code(int code) {
  if (code < 0 || code >= kNumCondOps) return std::nullopt;
  return static_cast<CondOp>(code);
}

bool agg_requires_numeric(AggOp op) {
  return op == AggOp::kMax || op == AggOp::kMin || op == AggOp::kSum || op == AggOp::kAvg;
}

}  // namespace cfcdc::sql
