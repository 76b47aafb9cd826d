#include "cfcdc/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <tuple>

#include "cfcdc/data/wikisql_io.hpp"
#include "cfcdc/error.hpp"

namespace cfcdc::eval {

using sql::Query;

namespace {

template <typename T>
std::multiset<T> multiset_of(const Query& q, T (*key)(const sql::Condition&)) {
  std::multiset<T> out;
  for (const auto& c : q.conds) out.insert(key(c));
  return out;
}

std::tuple<int, int, std::string> full_key(const sql::Condition& c) {
  return {c.col, static_cast<int>(c.op), canonical_value(c.value)};
}
std::pair<int, int> op_key(const sql::Condition& c) { return {c.col, static_cast<int>(c.op)}; }
std::pair<int, std::string> val_key(const sql::Condition& c) { return {c.col, canonical_value(c.value)}; }

double frac(long ok, long n) { return n ? static_cast<double>(ok) / static_cast<double>(n) : 0.0; }

}  // namespace

std::string canonical_value(const std::string& v) {
  std::string s;
  for (char c : v) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  s = s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  if (const auto num = sql::to_number(s)) return data::format_number(*num);
  return s;
}

bool lf_match(const Query& pred, const Query& gold) {
  return pred.agg == gold.agg && pred.sel_col == gold.sel_col &&
         multiset_of(pred, &full_key) == multiset_of(gold, &full_key);
}

ComponentAccuracy component_accuracies(const std::vector<Query>& preds, const std::vector<Query>& golds) {
  if (preds.size() != golds.size()) {
    throw InputError("component_accuracies: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(golds.size()) + " gold queries");
  }
  if (preds.empty()) throw InputError("component_accuracies: empty input");
  long sc = 0, sa = 0, wc = 0, wo = 0, wv = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Query& p = preds[i];
    const Query& g = golds[i];
    sc += p.sel_col == g.sel_col;
    sa += p.agg == g.agg;
    std::set<int> pc, gc;
    for (const auto& c : p.conds) pc.insert(c.col);
    for (const auto& c : g.conds) gc.insert(c.col);
    wc += pc == gc;
    wo += multiset_of(p, &op_key) == multiset_of(g, &op_key);
    wv += multiset_of(p, &val_key) == multiset_of(g, &val_key);
  }
  const long n = static_cast<long>(preds.size());
  return {frac(sc, n), frac(sa, n), frac(wc, n), frac(wo, n), frac(wv, n)};
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"n", r.n},
          {"lf", r.lf},
          {"ex", r.ex},
          {"s_col", r.components.s_col},
          {"s_agg", r.components.s_agg},
          {"w_col", r.components.w_col},
          {"w_op", r.components.w_op},
          {"w_val", r.components.w_val},
          {"lf_implies_ex_checked", r.lf_implies_ex_checked},
          {"lf_implies_ex_violations", r.lf_implies_ex_violations},
          {"exec_errors", r.exec_errors},
          {"gold_exec_errors", r.gold_exec_errors},
          {"eg", r.eg},
          {"k", r.k},
          {"invariants_ok", r.invariants_ok()}};
}

std::string to_key_value(const MetricsReport& r) {
  std::ostringstream out;
  const nlohmann::json j = to_json(r);
  for (const auto& [key, value] : j.items()) out << key << ' ' << value.dump() << '\n';
  return out.str();
}

MetricsReport score_predictions(const std::vector<Query>& preds, const std::vector<data::NLExample>& golds,
                                const data::TableStore& tables, std::vector<ExampleOutcome>* outcomes,
                                const sql::ExecOptions& exec) {
  if (preds.size() != golds.size()) throw InputError("score_predictions: length mismatch");
  if (outcomes) outcomes->clear();
  MetricsReport r;
  r.n = static_cast<long>(golds.size());
  long lf = 0, ex = 0;
  std::vector<Query> gold_q;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto& gold = golds[i];
    const auto it = tables.find(gold.table_id);
    if (it == tables.end()) throw ReferenceError("unknown table id: " + gold.table_id);
    gold_q.push_back(gold.label);
    ExampleOutcome o;
    o.pred = preds[i];
    o.lf = lf_match(preds[i], gold.label);
    std::optional<sql::ResultSet> gr;
    try {
      gr = sql::execute(gold.label, it->second, exec);
    } catch (const Error&) {
      ++r.gold_exec_errors;
    }
    try {
      const auto pr = sql::execute(preds[i], it->second, exec);
      o.ex = gr && sql::exec_match(pr, *gr);
    } catch (const Error& e) {
      o.exec_error = e.what();
      ++r.exec_errors;
    }
    if (o.lf) {
      ++r.lf_implies_ex_checked;
      if (!o.ex) ++r.lf_implies_ex_violations;
    }
    lf += o.lf;
    ex += o.ex;
    if (outcomes) outcomes->push_back(std::move(o));
  }
  r.lf = frac(lf, r.n);
  r.ex = frac(ex, r.n);
  if (r.n > 0) r.components = component_accuracies(preds, gold_q);
  return r;
}

EvalRun evaluate_split(const cfcc::Predictor& predictor, const std::vector<data::PreparedExample>& examples,
                       const data::TableStore& tables, bool eg, int k) {
  if (k < 1) throw InputError("evaluate: k must be >= 1");
  EvalRun run;
  std::vector<Query> preds;
  std::vector<data::NLExample> golds;
  cfcc::PredictOptions opts;
  opts.eg = eg;
  opts.k = k;
  for (const auto& ex : examples) {
    const auto it = tables.find(ex.example.table_id);
    if (it == tables.end()) throw ReferenceError("unknown table id: " + ex.example.table_id);
    run.predictions.push_back(predictor.predict(ex, it->second, opts));
    preds.push_back(run.predictions.back().query);
    golds.push_back(ex.example);
  }
  run.report = score_predictions(preds, golds, tables, &run.outcomes, opts.exec);
  run.report.eg = eg;
  run.report.k = k;
  return run;
}

nlohmann::json prediction_record(const data::PreparedExample& ex, const data::TableSchema& table,
                                 const cfcc::Prediction& p, const ExampleOutcome& o) {
  nlohmann::json j = {{"question", ex.example.question},
                      {"table_id", ex.example.table_id},
                      {"gold", data::label_to_json(ex.example.label)},
                      {"pred", data::label_to_json(p.query)},
                      {"sql", sql::serialize(p.query, table)},
                      {"lf", o.lf},
                      {"ex", o.ex},
                      {"scores", p.scores}};
  if (!o.exec_error.empty()) j["exec_error"] = o.exec_error;
  return j;
}

}  // namespace cfcdc::eval
