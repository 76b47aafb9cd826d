#include "doctest.h"

#include "cfcdc/error.hpp"
#include "cfcdc/eval/metrics.hpp"

using namespace cfcdc;
using namespace cfcdc::eval;
using sql::AggOp;
using sql::CondOp;
using sql::Query;

namespace {

data::TableSchema staff() {
  data::TableSchema t;
  t.table_id = "staff";
  t.columns = {{0, "name", data::ColumnType::kText}, {1, "age", data::ColumnType::kReal},
               {2, "dept", data::ColumnType::kText}};
  using C = data::Cell;
  t.rows = {{C{"Ann"}, C{30.0}, C{"CS"}}, {C{"Bob"}, C{20.0}, C{"Math"}}, {C{"Cy"}, C{25.0}, C{"CS"}}};
  return t;
}

}  // namespace

TEST_CASE("canonical values") {
  CHECK(canonical_value("  New York ") == "new york");
  CHECK(canonical_value("25.0") == "25");
  CHECK(canonical_value("2.50") == "2.5");
  CHECK(canonical_value("") == "");
}

TEST_CASE("logical form match") {
  const Query g{0, AggOp::kNone, {{2, CondOp::kEq, "CS"}, {1, CondOp::kGt, "21"}}};
  Query p{0, AggOp::kNone, {{1, CondOp::kGt, "21.0"}, {2, CondOp::kEq, "cs "}}};
  CHECK(lf_match(p, g));
  p.agg = AggOp::kCount;
  CHECK_FALSE(lf_match(p, g));
  p.agg = AggOp::kNone;
  p.conds.push_back({2, CondOp::kEq, "CS"});
  CHECK_FALSE(lf_match(p, g));
  CHECK_FALSE(lf_match(Query{0, AggOp::kNone, {{1, CondOp::kLt, "21"}, {2, CondOp::kEq, "CS"}}}, g));
}

TEST_CASE("component accuracies") {
  const Query g{1, AggOp::kMax, {{2, CondOp::kEq, "CS"}}};
  const Query p{1, AggOp::kNone, {{2, CondOp::kEq, "CS"}}};
  const auto c = component_accuracies({g, p}, {g, g});
  CHECK(c.s_col == 1.0);
  CHECK(c.s_agg == 0.5);
  CHECK(c.w_col == 1.0);
  CHECK(c.w_op == 1.0);
  CHECK(c.w_val == 1.0);
  const Query q{1, AggOp::kMax, {{2, CondOp::kGt, "ee"}}};
  const auto d = component_accuracies({q}, {g});
  CHECK(d.w_col == 1.0);
  CHECK(d.w_op == 0.0);
  CHECK(d.w_val == 0.0);
  CHECK_THROWS_AS(component_accuracies({g}, {g, g}), InputError);
  CHECK_THROWS_AS(component_accuracies({}, {}), InputError);
}

TEST_CASE("scoring gold against itself and order invariance") {
  data::TableStore tables{{"staff", staff()}};
  std::vector<data::NLExample> golds = {
      {"q1", "staff", Query{0, AggOp::kNone, {{2, CondOp::kEq, "CS"}}}},
      {"q2", "staff", Query{1, AggOp::kAvg, {}}},
      {"q3", "staff", Query{0, AggOp::kCount, {{1, CondOp::kGt, "100"}}}},
  };
  std::vector<Query> preds;
  for (const auto& g : golds) preds.push_back(g.label);
  const auto r = score_predictions(preds, golds, tables);
  CHECK(r.lf == 1.0);
  CHECK(r.ex == 1.0);
  CHECK(r.invariants_ok());
  CHECK(r.lf_implies_ex_checked == 3);

  // Different logical form, same result: EX but not LF.
  preds[1] = Query{1, AggOp::kAvg, {{1, CondOp::kGt, "0"}}};
  std::vector<ExampleOutcome> out;
  const auto r2 = score_predictions(preds, golds, tables, &out);
  CHECK(r2.lf == doctest::Approx(2.0 / 3));
  CHECK(r2.ex == 1.0);
  CHECK(out[1].ex);
  CHECK_FALSE(out[1].lf);

  // A prediction that fails to execute.
  preds[0] = Query{0, AggOp::kSum, {}};  // SUM over a TEXT column
  const auto r3 = score_predictions(preds, golds, tables, &out);
  CHECK(r3.exec_errors == 1);
  CHECK_FALSE(out[0].exec_error.empty());
  CHECK_FALSE(out[0].ex);

  std::vector<Query> rp(preds.rbegin(), preds.rend());
  std::vector<data::NLExample> rg(golds.rbegin(), golds.rend());
  const auto r4 = score_predictions(rp, rg, tables);
  CHECK(r4.lf == r3.lf);
  CHECK(r4.ex == r3.ex);

  CHECK_THROWS_AS(score_predictions({preds[0]}, golds, tables), InputError);
  golds[0].table_id = "missing";
  CHECK_THROWS_AS(score_predictions(preds, golds, tables), ReferenceError);

  const auto kv = to_key_value(r);
  CHECK(kv.find("lf 1") != std::string::npos);
  CHECK(to_json(r)["ex"] == 1.0);
}
