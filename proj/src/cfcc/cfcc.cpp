#include "cfcdc/cfcc/cfcc.hpp"

#include <cmath>

#include "cfcdc/error.hpp"

namespace cfcdc::cfcc {

using ifcd::TaskId;
using nn::Matrix;
using nn::Var;

CoupledInputs build_coupled_vectors(const Matrix& pooled_sel, int col_sel, const Matrix& pooled_where, int col_where,
                                    const Matrix& pooled_sw, int col_sw) {
  if (col_sel != col_where || col_sel != col_sw) {
    throw InputError("build_coupled_vectors: encodings belong to different candidates");
  }
  for (const Matrix* m : {&pooled_sel, &pooled_where, &pooled_sw}) {
    if (m->rows() != 1) throw InputError("build_coupled_vectors: pooled vectors must be single rows");
  }
  if (pooled_sel.cols() != pooled_sw.cols() || pooled_where.cols() != pooled_sw.cols()) {
    throw InputError("build_coupled_vectors: pooled widths differ");
  }
  CoupledInputs c;
  c.column = col_sel;
  c.os.resize(1, pooled_sel.cols() + pooled_sw.cols());
  c.os << pooled_sel, pooled_sw;
  c.ow.resize(1, pooled_where.cols() + pooled_sw.cols());
  c.ow << pooled_where, pooled_sw;
  return c;
}

double VotingConfig::alpha_for(TaskId t) const {
  auto it = per_task.find(t);
  return it == per_task.end() ? alpha : it->second;
}

void VotingConfig::validate() const {
  auto ok = [](double a) { return a >= 0.0 && a <= 1.0; };
  if (!ok(alpha)) throw InputError("voting: alpha must be in [0, 1]");
  for (const auto& [t, a] : per_task) {
    if (!ok(a)) throw InputError(std::string("voting: alpha for ") + ifcd::task_name(t) + " must be in [0, 1]");
  }
}

Matrix weighted_vote(const Matrix& expert_dist, const Matrix& cfcd_dist, double alpha) {
  if (expert_dist.rows() != cfcd_dist.rows() || expert_dist.cols() != cfcd_dist.cols()) {
    throw InputError("weighted_vote: support mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("weighted_vote: alpha must be in [0, 1]");
  return alpha * expert_dist + (1.0 - alpha) * cfcd_dist;
}

nlohmann::json to_json(const CFCCConfig& c) {
  return {{"hidden_dim", c.hidden_dim}, {"lstm_dim", c.lstm_dim}, {"mask_c", c.mask_c}, {"init_seed", c.init_seed}};
}

CFCCConfig cfcc_config_from_json(const nlohmann::json& j) {
  CFCCConfig c;
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.lstm_dim = j.at("lstm_dim").get<int>();
  c.mask_c = j.at("mask_c").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

Var CoupledOutputs::dist(TaskId t) const {
  switch (t) {
    case TaskId::kSelRank: return sel_rank;
    case TaskId::kSelAgg: return sel_agg;
    case TaskId::kSelNum: return sel_num;
    case TaskId::kWhrRank: return whr_rank;
    case TaskId::kWhrOp: return whr_op;
    case TaskId::kWhrNum: return whr_num;
    default: throw InputError(std::string("cfcc: no coupled head for task ") + ifcd::task_name(t));
  }
}

const std::vector<TaskId>& select_tasks() {
  static const std::vector<TaskId> t = {TaskId::kSelRank, TaskId::kSelAgg, TaskId::kSelNum};
  return t;
}

const std::vector<TaskId>& where_tasks() {
  static const std::vector<TaskId> t = {TaskId::kWhrRank, TaskId::kWhrOp, TaskId::kWhrNum};
  return t;
}

namespace {

int head_width(TaskId t) {
  switch (t) {
    case TaskId::kSelRank:
    case TaskId::kWhrRank: return 1;
    case TaskId::kSelAgg: return sql::kNumAggOps;
    case TaskId::kSelNum: return 2;
    case TaskId::kWhrOp: return sql::kNumCondOps;
    case TaskId::kWhrNum: return sql::kMaxWhereNum + 1;
    default: return 0;
  }
}

bool is_select_task(TaskId t) { return t == TaskId::kSelRank || t == TaskId::kSelAgg || t == TaskId::kSelNum; }

}  // namespace

CFCCModel::CFCCModel(CFCCConfig cfg) : cfg_(cfg), store_(std::make_unique<nn::ParameterStore>()) {
  nn::Rng init(nn::derive_seed(cfg_.init_seed, 0xCFCC));
  const ifcd::BlockConfig bc{cfg_.hidden_dim, 2 * cfg_.hidden_dim, cfg_.lstm_dim, cfg_.mask_c};
  select_block_ = ifcd::IFCDBlock(*store_, "select", bc, select_tasks(), init);
  where_block_ = ifcd::IFCDBlock(*store_, "where", bc, where_tasks(), init);
  for (const auto* tasks : {&select_tasks(), &where_tasks()}) {
    for (TaskId t : *tasks) {
      heads_.emplace(t, nn::Linear(*store_, std::string("head.") + ifcd::task_name(t), select_block_.output_dim(),
                                   head_width(t), init));
    }
  }
}

std::map<TaskId, Var> CFCCModel::block_features(const ifcd::IFCDBlock& block, Var own, Var sw) const {
  Var rows[] = {own, sw};
  Var seq = nn::concat_rows(rows);
  Var gate_in = nn::concat_cols(rows);
  return block.forward_all(seq, Matrix::Ones(2, 1), gate_in);
}

CoupledOutputs CFCCModel::forward(nn::Graph& g, Var pooled_sel, Var pooled_where, Var pooled_sw) const {
  auto sel = block_features(select_block_, pooled_sel, pooled_sw);
  auto whr = block_features(where_block_, pooled_where, pooled_sw);
  auto rank = [&](TaskId t, Var f) {
    Var two[] = {g.scalar_constant(0.0), heads_.at(t)(f)};
    return nn::softmax_rows(nn::concat_cols(two));
  };
  auto cls = [&](TaskId t, Var f) { return nn::softmax_rows(heads_.at(t)(f)); };
  CoupledOutputs o;
  o.sel_rank = rank(TaskId::kSelRank, sel.at(TaskId::kSelRank));
  o.sel_agg = cls(TaskId::kSelAgg, sel.at(TaskId::kSelAgg));
  o.sel_num = cls(TaskId::kSelNum, sel.at(TaskId::kSelNum));
  o.whr_rank = rank(TaskId::kWhrRank, whr.at(TaskId::kWhrRank));
  o.whr_op = cls(TaskId::kWhrOp, whr.at(TaskId::kWhrOp));
  o.whr_num = cls(TaskId::kWhrNum, whr.at(TaskId::kWhrNum));
  return o;
}

Matrix CFCCModel::coupled_predict(const CoupledInputs& in, TaskId task) const {
  const nn::Index h = cfg_.hidden_dim;
  const Matrix& v = is_select_task(task) ? in.os : in.ow;
  if (head_width(task) == 0) throw InputError(std::string("coupled_predict: unsupported task ") + ifcd::task_name(task));
  if (v.rows() != 1 || v.cols() != 2 * h) throw InputError("coupled_predict: coupled vector has the wrong width");
  nn::Graph g;
  Var own = g.constant(v.leftCols(h));
  Var sw = g.constant(v.rightCols(h));
  const auto& block = is_select_task(task) ? select_block_ : where_block_;
  Var f = block.forward(nn::concat_rows(std::array{own, sw}), Matrix::Ones(2, 1), nn::concat_cols(std::array{own, sw}),
                        task);
  Var logits = heads_.at(task)(f);
  if (task == TaskId::kSelRank || task == TaskId::kWhrRank) {
    Var two[] = {g.scalar_constant(0.0), logits};
    logits = nn::concat_cols(two);
  }
  return nn::softmax_rows(logits).value();
}

Var CFCCModel::loss(nn::Graph& g, const std::map<TaskId, Var>& task_losses) const {
  std::map<TaskId, Var> s, w;
  for (const auto& [t, l] : task_losses) (is_select_task(t) ? s : w).emplace(t, l);
  std::vector<Var> parts;
  if (!s.empty()) parts.push_back(select_block_.loss(g, s));
  if (!w.empty()) parts.push_back(where_block_.loss(g, w));
  if (parts.empty()) throw InputError("cfcc loss: no task losses");
  return nn::weighted_sum(parts, std::vector<double>(parts.size(), 1.0));
}

}  // namespace cfcdc::cfcc
