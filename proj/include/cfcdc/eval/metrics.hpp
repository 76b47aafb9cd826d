#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "cfcdc/cfcc/predictor.hpp"
#include "cfcdc/data/cache.hpp"
#include "cfcdc/sql/engine.hpp"

namespace cfcdc::eval {

// Lowercase, trim, and print numbers in shortest form ("25.0" -> "25").
std::string canonical_value(const std::string& v);

// Same agg and select column, conditions equal as multisets of (col, op, canonical value).
bool lf_match(const sql::Query& pred, const sql::Query& gold);

struct ComponentAccuracy {
  double s_col = 0.0;
  double s_agg = 0.0;
  double w_col = 0.0;  // set of condition columns
  double w_op = 0.0;   // multiset of (col, op)
  double w_val = 0.0;  // multiset of (col, canonical value)
};

// Throws InputError when the lists differ in length or are empty.
ComponentAccuracy component_accuracies(const std::vector<sql::Query>& preds, const std::vector<sql::Query>& golds);

struct MetricsReport {
  long n = 0;
  double lf = 0.0;
  double ex = 0.0;
  ComponentAccuracy components;
  long lf_implies_ex_checked = 0;
  long lf_implies_ex_violations = 0;
  long exec_errors = 0;       // predictions that failed to execute
  long gold_exec_errors = 0;
  bool eg = false;
  int k = 0;

  bool invariants_ok() const { return lf_implies_ex_violations == 0 && ex + 1e-12 >= lf; }
};

nlohmann::json to_json(const MetricsReport& r);
// One "key value" pair per line.
std::string to_key_value(const MetricsReport& r);

struct ExampleOutcome {
  sql::Query pred;
  bool lf = false;
  bool ex = false;
  std::string exec_error;  // empty when the prediction executed
};

// Scores aligned predictions against gold examples. Throws ReferenceError when
// a table is missing and InputError on a length mismatch.
MetricsReport score_predictions(const std::vector<sql::Query>& preds, const std::vector<data::NLExample>& golds,
                                const data::TableStore& tables, std::vector<ExampleOutcome>* outcomes = nullptr,
                                const sql::ExecOptions& exec = {});

struct EvalRun {
  MetricsReport report;
  std::vector<ExampleOutcome> outcomes;
  std::vector<cfcc::Prediction> predictions;
};

EvalRun evaluate_split(const cfcc::Predictor& predictor, const std::vector<data::PreparedExample>& examples,
                       const data::TableStore& tables, bool eg, int k);

// One JSONL record: question, table_id, gold, pred, SQL text, lf/ex flags, scores.
nlohmann::json prediction_record(const data::PreparedExample& ex, const data::TableSchema& table,
                                 const cfcc::Prediction& p, const ExampleOutcome& o);

}  // namespace cfcdc::eval
