#include "cfcdc/cfcd/cfcd.hpp"

#include <cmath>
#include <set>

#include "cfcdc/error.hpp"

namespace cfcdc::cfcd {

using ifcd::TaskId;
using nn::Index;
using nn::Matrix;
using nn::Var;

const char* role_name(ClauseRole r) {
  switch (r) {
    case ClauseRole::kSelect: return "select";
    case ClauseRole::kWhere: return "where";
    case ClauseRole::kSw: return "sw";
  }
  return "?";
}

ClauseRole role_from_name(const std::string& name) {
  if (name == "select") return ClauseRole::kSelect;
  if (name == "where") return ClauseRole::kWhere;
  if (name == "sw") return ClauseRole::kSw;
  throw InputError("unknown role '" + name + "' (expected select, where or sw)");
}

int max_num(ClauseRole r) {
  switch (r) {
    case ClauseRole::kSelect: return 1;
    case ClauseRole::kWhere: return sql::kMaxWhereNum;
    case ClauseRole::kSw: return sql::kMaxWhereNum + 1;
  }
  return 0;
}

std::vector<TaskId> role_tasks(ClauseRole r) {
  switch (r) {
    case ClauseRole::kSelect: return {TaskId::kSelRank, TaskId::kSelAgg, TaskId::kSelNum};
    case ClauseRole::kWhere:
      return {TaskId::kWhrRank, TaskId::kWhrOp, TaskId::kWhrNum, TaskId::kWhrValStart, TaskId::kWhrValEnd};
    case ClauseRole::kSw: return {TaskId::kSwRank, TaskId::kSwNum};
  }
  return {};
}

TaskId rank_task(ClauseRole r) {
  return r == ClauseRole::kSelect ? TaskId::kSelRank : r == ClauseRole::kWhere ? TaskId::kWhrRank : TaskId::kSwRank;
}

TaskId num_task(ClauseRole r) {
  return r == ClauseRole::kSelect ? TaskId::kSelNum : r == ClauseRole::kWhere ? TaskId::kWhrNum : TaskId::kSwNum;
}

void RDropConfig::validate() const {
  if (!(lambda >= 0.0) || !(mu >= 0.0)) throw InputError("rdrop: lambda and mu must be >= 0");
  if (!(prob_floor > 0.0 && prob_floor <= 1e-3)) throw InputError("rdrop: prob_floor must be in (0, 1e-3]");
}

nlohmann::json to_json(const ModuleConfig& c) {
  return {{"role", role_name(c.role)}, {"encoder", encoder::to_json(c.encoder)}, {"use_ifcd", c.use_ifcd},
          {"lstm_dim", c.lstm_dim},     {"mask_c", c.mask_c},                      {"init_seed", c.init_seed}};
}

ModuleConfig module_config_from_json(const nlohmann::json& j) {
  ModuleConfig c;
  c.role = role_from_name(j.at("role").get<std::string>());
  c.encoder = encoder::encoder_config_from_json(j.at("encoder"));
  c.use_ifcd = j.at("use_ifcd").get<bool>();
  c.lstm_dim = j.at("lstm_dim").get<int>();
  c.mask_c = j.at("mask_c").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

CFCDModule::CFCDModule(ModuleConfig cfg) : cfg_(std::move(cfg)), store_(std::make_unique<nn::ParameterStore>()) {
  nn::Rng init(nn::derive_seed(cfg_.init_seed, static_cast<std::uint64_t>(cfg_.role) + 1));
  encoder_ = encoder::Encoder(*store_, "encoder", cfg_.encoder, init);
  const int hidden = cfg_.encoder.hidden_dim;
  int feat = hidden;
  if (cfg_.use_ifcd) {
    ifcd::BlockConfig bc{hidden, hidden, cfg_.lstm_dim, cfg_.mask_c};
    block_.emplace(*store_, "ifcd", bc, role_tasks(cfg_.role), init);
    feat = block_->output_dim();
  }
  rank_head_ = nn::Linear(*store_, "head.rank", feat, 1, init);
  num_head_ = nn::Linear(*store_, "head.num", feat, max_num(cfg_.role) + 1, init);
  if (cfg_.role == ClauseRole::kSelect) cls_head_ = nn::Linear(*store_, "head.agg", feat, sql::kNumAggOps, init);
  if (cfg_.role == ClauseRole::kWhere) {
    cls_head_ = nn::Linear(*store_, "head.op", feat, sql::kNumCondOps, init);
    start_head_ = nn::Linear(*store_, "head.val_start", feat, hidden, init);
    end_head_ = nn::Linear(*store_, "head.val_end", feat, hidden, init);
  }
}

HeadOutputs CFCDModule::forward(nn::Graph& g, const data::TokenizedInput& tokens, nn::Rng* dropout) const {
  return forward(g, encoder_.encode(g, tokens, dropout), tokens.question_start, tokens.question_length());
}

HeadOutputs CFCDModule::forward(nn::Graph& g, const encoder::EncodedSequence& enc, int question_start,
                                int question_length) const {
  const auto tasks = role_tasks(cfg_.role);
  std::map<TaskId, Var> feats;
  if (block_) {
    Matrix mask = enc.segment_mask;
    if (mask.sum() < 0.5) mask.setOnes();  // question fully truncated
    feats = block_->forward_all(enc.hidden, mask, enc.pooled);
  } else {
    for (TaskId t : tasks) feats.emplace(t, enc.pooled);
  }

  HeadOutputs out;
  out.pooled = enc.pooled;
  Var logit = rank_head_(feats.at(rank_task(cfg_.role)));
  Var two[] = {g.scalar_constant(0.0), logit};
  out.rank = nn::softmax_rows(nn::concat_cols(two));
  out.num = nn::softmax_rows(num_head_(feats.at(num_task(cfg_.role))));
  if (cfg_.role == ClauseRole::kSelect) out.cls = nn::softmax_rows(cls_head_(feats.at(TaskId::kSelAgg)));
  if (cfg_.role == ClauseRole::kWhere) {
    out.cls = nn::softmax_rows(cls_head_(feats.at(TaskId::kWhrOp)));
    if (question_length > 0) {
      Var hq = nn::slice_rows(enc.hidden, question_start, question_length);
      out.start = nn::softmax_rows(nn::transpose(nn::matmul_nt(hq, start_head_(feats.at(TaskId::kWhrValStart)))));
      out.end = nn::softmax_rows(nn::transpose(nn::matmul_nt(hq, end_head_(feats.at(TaskId::kWhrValEnd)))));
    }
  }
  return out;
}

CandidateScores CFCDModule::score(const data::TokenizedInput& tokens) const {
  nn::Graph g;
  HeadOutputs h = forward(g, tokens, nullptr);
  CandidateScores s;
  s.relevance = h.rank.value()(0, 1);
  s.num = h.num.value();
  if (h.cls) s.cls = h.cls->value();
  if (h.start) s.start = h.start->value();
  if (h.end) s.end = h.end->value();
  s.pooled = h.pooled.value();
  return s;
}

std::optional<std::pair<int, int>> find_value_span(const std::string& question, const std::string& value,
                                                   int max_tokens) {
  const auto q = data::split_words(question);
  const auto v = data::split_words(value);
  const int n = std::min<int>(max_tokens, static_cast<int>(q.size()));
  const int m = static_cast<int>(v.size());
  if (m == 0) return std::nullopt;
  for (int i = 0; i + m <= n; ++i) {
    bool ok = true;
    for (int k = 0; k < m && ok; ++k) ok = q[static_cast<std::size_t>(i + k)].text == v[static_cast<std::size_t>(k)].text;
    if (ok) return std::pair{i, i + m - 1};
  }
  return std::nullopt;
}

std::vector<CandidateLabels> role_labels(ClauseRole role, const data::NLExample& ex,
                                         const std::vector<data::TokenizedInput>& candidates) {
  const auto& label = ex.label;
  std::set<int> where_cols;
  for (const auto& c : label.conds) where_cols.insert(c.col);
  std::set<int> union_cols = where_cols;
  union_cols.insert(label.sel_col);

  std::vector<CandidateLabels> out;
  out.reserve(candidates.size());
  for (const auto& cand : candidates) {
    const int col = cand.column_index;
    CandidateLabels l;
    switch (role) {
      case ClauseRole::kSelect:
        l.relevant = col == label.sel_col ? 1 : 0;
        l.num = 1;
        if (l.relevant) l.cls = static_cast<int>(label.agg);
        break;
      case ClauseRole::kWhere:
        l.relevant = where_cols.contains(col) ? 1 : 0;
        l.num = std::min<int>(static_cast<int>(label.conds.size()), sql::kMaxWhereNum);
        for (const auto& c : label.conds) {
          if (c.col != col) continue;
          l.cls = static_cast<int>(c.op);
          if (auto span = find_value_span(ex.question, c.value, cand.question_length())) {
            l.span_start = span->first;
            l.span_end = span->second;
          }
          break;
        }
        break;
      case ClauseRole::kSw:
        l.relevant = union_cols.contains(col) ? 1 : 0;
        l.num = std::min<int>(static_cast<int>(union_cols.size()), max_num(role));
        break;
    }
    out.push_back(l);
  }
  return out;
}

int predict_num(const std::vector<std::pair<double, Matrix>>& per_column) {
  if (per_column.empty()) throw InputError("predict_num: no columns");
  const Index k = per_column.front().second.size();
  std::vector<double> votes(static_cast<std::size_t>(k), 0.0);
  for (const auto& [rel, dist] : per_column) {
    if (dist.size() != k) throw InputError("predict_num: distribution sizes differ");
    if (std::fabs(dist.sum() - 1.0) > 1e-6) throw InputError("predict_num: distribution does not sum to 1");
    for (Index n = 0; n < k; ++n) votes[static_cast<std::size_t>(n)] += rel * dist.data()[n];
  }
  int best = 0;
  for (int n = 1; n < static_cast<int>(k); ++n) {
    if (votes[static_cast<std::size_t>(n)] > votes[static_cast<std::size_t>(best)]) best = n;
  }
  return best;
}

double kl(const Matrix& p, const Matrix& q) {
  if (p.size() != q.size()) throw InputError("kl: support mismatch");
  return (p.array() * (p.array() / q.array()).log()).sum();
}

double kl_sym(const Matrix& p, const Matrix& q) { return 0.5 * (kl(p, q) + kl(q, p)); }

Matrix floor_renormalize(const Matrix& p, double eps) {
  Matrix c = p.cwiseMax(eps);
  return c / c.sum();
}

Matrix softmax(const Matrix& logits) {
  Matrix e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

RDropTerms rdrop_loss(const Matrix& t1, const Matrix& t2, const Matrix& b1, const Matrix& b2, int label,
                      const RDropConfig& cfg) {
  cfg.validate();
  for (const Matrix* m : {&t1, &t2, &b1, &b2}) {
    if (!m->allFinite()) throw NumericError("rdrop_loss: non-finite input");
  }
  if (t1.size() != t2.size() || b1.size() != b2.size()) throw InputError("rdrop_loss: shape mismatch");
  if (label < 0 || label >= t1.size()) throw InputError("rdrop_loss: label out of range");
  const Matrix p1 = floor_renormalize(t1, cfg.prob_floor);
  const Matrix p2 = floor_renormalize(t2, cfg.prob_floor);
  const Matrix s1 = floor_renormalize(softmax(b1), cfg.prob_floor);
  const Matrix s2 = floor_renormalize(softmax(b2), cfg.prob_floor);
  RDropTerms r;
  r.loss1 = 0.5 * (-std::log(p1.data()[label]) - std::log(p2.data()[label]));
  r.loss2 = cfg.lambda * (cfg.symmetric ? kl_sym(p1, p2) : kl(p1, p2));
  r.loss3 = cfg.mu * (cfg.symmetric ? kl_sym(s1, s2) : kl(s1, s2));
  return r;
}

Var kl_term(Var p, Var q, const RDropConfig& cfg) {
  Var pf = nn::prob_floor(p, cfg.prob_floor);
  Var qf = nn::prob_floor(q, cfg.prob_floor);
  if (!cfg.symmetric) return nn::kl_div(pf, qf);
  return nn::scale(nn::add(nn::kl_div(pf, qf), nn::kl_div(qf, pf)), 0.5);
}

Var pooled_kl_term(Var b1, Var b2, const RDropConfig& cfg) {
  return kl_term(nn::softmax_rows(b1), nn::softmax_rows(b2), cfg);
}

FGMResult fgm_step(nn::Parameter& embedding, const nn::Gradients& grads, const FGMConfig& cfg,
                   const std::function<double()>& adversarial_pass) {
  FGMResult r;
  if (!cfg.enabled) return r;
  if (!(cfg.epsilon >= 0.0)) throw InputError("fgm: epsilon must be >= 0");
  const Matrix* g = grads.find(&embedding);
  if (g == nullptr) return r;
  const double norm = g->norm();
  if (!(norm > 0.0)) return r;
  if (!std::isfinite(norm)) throw NumericError("fgm: non-finite embedding gradient");

  const Matrix saved = embedding.value();
  embedding.value() += (cfg.epsilon / norm) * *g;
  r.perturbation_norm = (embedding.value() - saved).norm();
  r.applied = true;
  try {
    r.adversarial_loss = adversarial_pass();
  } catch (...) {
    embedding.value() = saved;
    throw;
  }
  embedding.value() = saved;
  return r;
}

}  // namespace cfcdc::cfcd
