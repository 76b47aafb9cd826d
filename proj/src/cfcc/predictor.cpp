#include "cfcdc/cfcc/predictor.hpp"

#include <algorithm>
#include <numeric>

#include "cfcdc/error.hpp"
#include "cfcdc/nn/checkpoint.hpp"

namespace cfcdc::cfcc {

using cfcd::ClauseRole;
using ifcd::TaskId;
using nlohmann::json;
using nn::Index;
using nn::Matrix;

namespace {

Matrix rank_pair(double r) {
  Matrix m(1, 2);
  m << 1.0 - r, r;
  return m;
}

// Indices of the k largest entries of a 1xK row, best first, ties by index.
std::vector<int> top_k(const Matrix& row, int k) {
  std::vector<int> idx(static_cast<std::size_t>(row.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return row.data()[a] > row.data()[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(k)));
  return idx;
}

int argmax(const Matrix& row) { return top_k(row, 1).front(); }

std::string slice_value(const std::string& question, const data::TokenizedInput& cand, const ValueSpan& s) {
  const auto b = cand.question_spans[static_cast<std::size_t>(s.start)].first;
  const auto e = cand.question_spans[static_cast<std::size_t>(s.end)].second;
  return question.substr(b, e - b);
}

struct SlotOption {
  double p = 1.0;
  int col = 0;
  int code = 0;  // agg or op
  std::string value;
};

}  // namespace

std::vector<ValueSpan> top_spans(const Matrix& start, const Matrix& end, int k, int max_len) {
  std::vector<ValueSpan> all;
  const int n = static_cast<int>(std::min(start.size(), end.size()));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < std::min(n, i + max_len); ++j) all.push_back({i, j, start.data()[i] * end.data()[j]});
  }
  std::stable_sort(all.begin(), all.end(), [](const ValueSpan& a, const ValueSpan& b) { return a.score > b.score; });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<std::size_t>(k));
  return all;
}

Predictor::Predictor(data::Vocabulary vocab, int max_seq_len, std::unique_ptr<cfcd::CFCDModule> select,
                     std::unique_ptr<cfcd::CFCDModule> where, std::unique_ptr<cfcd::CFCDModule> sw,
                     std::unique_ptr<CFCCModel> cfcc, VotingConfig voting)
    : vocab_(std::move(vocab)),
      max_seq_len_(max_seq_len),
      select_(std::move(select)),
      where_(std::move(where)),
      sw_(std::move(sw)),
      cfcc_(std::move(cfcc)),
      voting_(std::move(voting)) {
  if (!select_ || !where_ || !sw_ || !cfcc_) throw InputError("predictor: missing module");
  if (select_->role() != ClauseRole::kSelect || where_->role() != ClauseRole::kWhere || sw_->role() != ClauseRole::kSw) {
    throw InputError("predictor: modules are not in select/where/sw order");
  }
  voting_.validate();
}

const cfcd::CFCDModule& Predictor::module(ClauseRole r) const {
  return r == ClauseRole::kSelect ? *select_ : r == ClauseRole::kWhere ? *where_ : *sw_;
}

std::vector<ColumnView> Predictor::analyze(const std::vector<data::TokenizedInput>& candidates) const {
  std::vector<ColumnView> views;
  views.reserve(candidates.size());
  for (const auto& cand : candidates) {
    ColumnView v;
    v.col = cand.column_index;
    v.sel = select_->score(cand);
    v.whr = where_->score(cand);
    v.sw = sw_->score(cand);
    nn::Graph g;
    const CoupledOutputs out = cfcc_->forward(g, g.constant(v.sel.pooled), g.constant(v.whr.pooled), g.constant(v.sw.pooled));
    for (const auto* tasks : {&select_tasks(), &where_tasks()}) {
      for (TaskId t : *tasks) v.coupled.emplace(t, out.dist(t).value());
    }
    const std::map<TaskId, Matrix> own = {{TaskId::kSelRank, rank_pair(v.sel.relevance)},
                                          {TaskId::kSelAgg, v.sel.cls},
                                          {TaskId::kSelNum, v.sel.num},
                                          {TaskId::kWhrRank, rank_pair(v.whr.relevance)},
                                          {TaskId::kWhrOp, v.whr.cls},
                                          {TaskId::kWhrNum, v.whr.num}};
    for (const auto& [t, d] : own) v.voted.emplace(t, weighted_vote(v.coupled.at(t), d, voting_.alpha_for(t)));
    views.push_back(std::move(v));
  }
  return views;
}

Prediction Predictor::predict(const std::string& question, const data::TableSchema& table,
                              const PredictOptions& opts) const {
  std::vector<data::TokenizedInput> cands;
  for (const auto& col : table.columns) {
    cands.push_back(data::tokenize(data::build_candidate_input(col, question), vocab_, max_seq_len_));
  }
  return decide(question, cands, table, opts);
}

Prediction Predictor::predict(const data::PreparedExample& ex, const data::TableSchema& table,
                              const PredictOptions& opts) const {
  return decide(ex.example.question, ex.candidates, table, opts);
}

Prediction Predictor::decide(const std::string& question, const std::vector<data::TokenizedInput>& candidates,
                             const data::TableSchema& table, const PredictOptions& opts) const {
  if (candidates.empty()) throw InputError("predict: table has no columns");
  const auto views = analyze(candidates);

  std::vector<std::pair<double, Matrix>> sel_num, whr_num;
  Prediction p;
  std::map<int, std::vector<ValueSpan>> spans;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    sel_num.emplace_back(v.sw.relevance, v.voted.at(TaskId::kSelNum));
    whr_num.emplace_back(v.sw.relevance, v.voted.at(TaskId::kWhrNum));
    p.components.select_items.push_back(
        {static_cast<sql::AggOp>(argmax(v.voted.at(TaskId::kSelAgg))), v.col, v.voted.at(TaskId::kSelRank)(0, 1)});
    WhereItem w{v.col, static_cast<sql::CondOp>(argmax(v.voted.at(TaskId::kWhrOp))), "",
                v.voted.at(TaskId::kWhrRank)(0, 1)};
    auto& sp = spans[v.col];
    if (v.whr.start.size() > 0) sp = top_spans(v.whr.start, v.whr.end, 2);
    if (!sp.empty()) w.value = slice_value(question, candidates[i], sp.front());
    p.components.where_items.push_back(std::move(w));
  }
  p.components.n_s = cfcd::predict_num(sel_num);
  p.components.n_w = cfcd::predict_num(whr_num);
  sort_components(p.components);
  p.assembled = assemble_sql(p.components);
  p.query = p.assembled.query;

  if (opts.eg) {
    auto view_of = [&](int col) -> const ColumnView& {
      for (const auto& v : views) {
        if (v.col == col) return v;
      }
      throw InputError("predict: unknown column");
    };
    auto cand_of = [&](int col) -> const data::TokenizedInput& {
      for (const auto& c : candidates) {
        if (c.column_index == col) return c;
      }
      throw InputError("predict: unknown column");
    };
    std::vector<std::vector<SlotOption>> slots;
    std::vector<SlotOption> sel_opts;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, p.components.select_items.size()); ++i) {
      const auto& item = p.components.select_items[i];
      const Matrix& agg = view_of(item.col).voted.at(TaskId::kSelAgg);
      for (int a : top_k(agg, 2)) sel_opts.push_back({item.score * agg.data()[a], item.col, a, ""});
    }
    slots.push_back(std::move(sel_opts));
    const int n_w = static_cast<int>(p.assembled.query.conds.size());
    for (int i = 0; i < n_w; ++i) {
      const auto& item = p.components.where_items[static_cast<std::size_t>(i)];
      const Matrix& op = view_of(item.col).voted.at(TaskId::kWhrOp);
      std::vector<SlotOption> opts_i;
      for (int o : top_k(op, 2)) {
        const auto& sp = spans[item.col];
        if (sp.empty()) {
          opts_i.push_back({op.data()[o], item.col, o, ""});
          continue;
        }
        for (const auto& s : sp) {
          opts_i.push_back({op.data()[o] * s.score, item.col, o, slice_value(question, cand_of(item.col), s)});
        }
      }
      slots.push_back(std::move(opts_i));
    }
    std::vector<sql::ScoredQuery> all;
    std::vector<std::size_t> pick(slots.size(), 0);
    while (true) {
      sql::ScoredQuery q;
      q.score = 1.0;
      const auto& s0 = slots[0][pick[0]];
      q.query.sel_col = s0.col;
      q.query.agg = static_cast<sql::AggOp>(s0.code);
      q.score *= s0.p;
      for (std::size_t s = 1; s < slots.size(); ++s) {
        const auto& o = slots[s][pick[s]];
        q.query.conds.push_back({o.col, static_cast<sql::CondOp>(o.code), o.value});
        q.score *= o.p;
      }
      all.push_back(std::move(q));
      std::size_t s = slots.size();
      while (s > 0 && ++pick[s - 1] == slots[s - 1].size()) pick[--s] = 0;
      if (s == 0) break;
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const sql::ScoredQuery& a, const sql::ScoredQuery& b) { return a.score > b.score; });
    // Keep every select alternative with its best WHERE clause before filling
    // by joint score; otherwise WHERE variations can crowd out the only
    // executable aggregation.
    std::vector<bool> keep(all.size(), false);
    std::size_t kept = 0;
    const std::size_t cap = static_cast<std::size_t>(opts.k);
    for (const auto& s : slots[0]) {
      for (std::size_t i = 0; i < all.size() && kept < cap; ++i) {
        const auto& q = all[i].query;
        if (q.sel_col == s.col && static_cast<int>(q.agg) == s.code) {
          kept += keep[i] ? 0 : 1;
          keep[i] = true;
          break;
        }
      }
    }
    for (std::size_t i = 0; i < all.size() && kept < cap; ++i) {
      kept += keep[i] ? 0 : 1;
      keep[i] = true;
    }
    std::vector<sql::ScoredQuery> chosen;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (keep[i]) chosen.push_back(all[i]);
    }
    p.candidates = chosen;
    p.query = sql::eg_decode(chosen, table, sql::EgOptions{opts.k, true, opts.exec});
  }

  json sel = json::array();
  for (const auto& s : p.components.select_items) {
    sel.push_back({{"col", s.col}, {"agg", static_cast<int>(s.agg)}, {"score", s.score}});
  }
  json whr = json::array();
  for (const auto& w : p.components.where_items) {
    whr.push_back({{"col", w.col}, {"op", static_cast<int>(w.op)}, {"value", w.value}, {"score", w.score}});
  }
  p.scores = {{"n_s", p.components.n_s}, {"n_w", p.components.n_w}, {"select", sel}, {"where", whr}};
  if (p.assembled.clamped) p.scores["warning"] = p.assembled.warning;
  return p;
}

void Predictor::save(const std::filesystem::path& path, const json& provenance) const {
  json per_task = json::object();
  for (const auto& [t, a] : voting_.per_task) per_task[ifcd::task_name(t)] = a;
  json meta = {{"format", "cfcdc-bundle"},
               {"vocab", vocab_.tokens()},
               {"max_seq_len", max_seq_len_},
               {"modules",
                {{"select", cfcd::to_json(select_->config())},
                 {"where", cfcd::to_json(where_->config())},
                 {"sw", cfcd::to_json(sw_->config())}}},
               {"cfcc", to_json(cfcc_->config())},
               {"voting", {{"alpha", voting_.alpha}, {"per_task", per_task}}},
               {"provenance", provenance}};
  nn::write_checkpoint(path, meta,
                       {{"select", &select_->store()}, {"where", &where_->store()}, {"sw", &sw_->store()},
                        {"cfcc", &cfcc_->store()}});
}

Predictor Predictor::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ReferenceError("bundle not found: " + path.string());
  const nn::Checkpoint ckpt = nn::read_checkpoint(path);
  const json& m = ckpt.meta;
  if (m.value("format", "") != "cfcdc-bundle") throw FormatError("not a coupled bundle: " + path.string());
  try {
    auto words = m.at("vocab").get<std::vector<std::string>>();
    if (words.size() < 4) throw FormatError("bundle vocabulary is truncated");
    data::Vocabulary vocab = data::Vocabulary::from_tokens(std::vector<std::string>(words.begin() + 4, words.end()));
    auto make = [&](const char* role) {
      auto mod = std::make_unique<cfcd::CFCDModule>(cfcd::module_config_from_json(m.at("modules").at(role)));
      nn::load_parameters(ckpt, role, mod->store());
      return mod;
    };
    auto cfcc = std::make_unique<CFCCModel>(cfcc_config_from_json(m.at("cfcc")));
    nn::load_parameters(ckpt, "cfcc", cfcc->store());
    VotingConfig voting;
    voting.alpha = m.at("voting").at("alpha").get<double>();
    for (const auto& [name, a] : m.at("voting").at("per_task").items()) {
      bool found = false;
      for (const auto* tasks : {&select_tasks(), &where_tasks()}) {
        for (TaskId t : *tasks) {
          if (name == ifcd::task_name(t)) {
            voting.per_task[t] = a.get<double>();
            found = true;
          }
        }
      }
      if (!found) throw FormatError("bundle voting names unknown task " + name);
    }
    Predictor p(std::move(vocab), m.at("max_seq_len").get<int>(), make("select"), make("where"), make("sw"),
                std::move(cfcc), voting);
    p.provenance_ = m.at("provenance");
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt bundle metadata: ") + e.what());
  }
}

}  // namespace cfcdc::cfcc
