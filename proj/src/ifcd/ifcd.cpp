#include "cfcdc/ifcd/ifcd.hpp"

#include <cmath>

#include "cfcdc/error.hpp"

namespace cfcdc::ifcd {

using nn::Matrix;
using nn::Var;

const char* task_name(TaskId t) {
  switch (t) {
    case TaskId::kSelRank: return "sel_rank";
    case TaskId::kSelAgg: return "sel_agg";
    case TaskId::kSelNum: return "sel_num";
    case TaskId::kWhrRank: return "whr_rank";
    case TaskId::kWhrOp: return "whr_op";
    case TaskId::kWhrNum: return "whr_num";
    case TaskId::kWhrValStart: return "whr_val_start";
    case TaskId::kWhrValEnd: return "whr_val_end";
    case TaskId::kSwRank: return "sw_rank";
    case TaskId::kSwNum: return "sw_num";
  }
  return "?";
}

Expert::Expert(nn::ParameterStore& store, const std::string& prefix, int input_dim, int lstm_dim, nn::Rng& init,
               double mask_c)
    : lstm_dim_(lstm_dim), c_(mask_c) {
  if (input_dim < 1 || lstm_dim < 1) throw InputError("expert: dimensions must be positive");
  if (!(mask_c > 0.0)) throw InputError("expert: masking constant must be positive");
  const int h = lstm_dim;
  auto forget_bias = [h] {
    Matrix b = Matrix::Zero(1, 4 * h);
    b.block(0, h, 1, h).setOnes();
    return b;
  };
  fw_wx = &store.create(prefix + ".fw.wx", nn::glorot(input_dim, 4 * h, init));
  fw_wh = &store.create(prefix + ".fw.wh", nn::glorot(h, 4 * h, init));
  fw_b = &store.create(prefix + ".fw.b", forget_bias());
  bw_wx = &store.create(prefix + ".bw.wx", nn::glorot(input_dim, 4 * h, init));
  bw_wh = &store.create(prefix + ".bw.wh", nn::glorot(h, 4 * h, init));
  bw_b = &store.create(prefix + ".bw.b", forget_bias());
  att_w = &store.create(prefix + ".att.w", nn::glorot(2 * h, 2 * h, init));
  att_theta = &store.create(prefix + ".att.theta", Matrix::Zero(1, 2 * h));
}

std::vector<nn::Parameter*> Expert::parameters() const {
  return {fw_wx, fw_wh, fw_b, bw_wx, bw_wh, bw_b, att_w, att_theta};
}

Var Expert::bilstm(Var b) const {
  nn::Graph& g = *b.graph;
  if (b.rows() < 1) throw InputError("bilstm: empty sequence");
  Var parts[] = {nn::lstm(b, g.param(*fw_wx), g.param(*fw_wh), g.param(*fw_b), false),
                 nn::lstm(b, g.param(*bw_wx), g.param(*bw_wh), g.param(*bw_b), true)};
  return nn::concat_cols(parts);
}

AttentionResult Expert::attention_pool(Var z, const Matrix& mask) const {
  nn::Graph& g = *z.graph;
  if (mask.rows() != z.rows() || mask.cols() != 1) throw InputError("attention_pool: mask shape mismatch");
  if (mask.sum() < 0.5) throw InputError("attention_pool: mask selects no position");
  Var query = nn::add_row(nn::matmul(z, g.param(*att_w)), g.param(*att_theta));
  Var key = nn::tanh(query);
  Var score = nn::mask_scores(nn::rowwise_dot(query, key), mask, c_);
  Var a = nn::softmax_rows(nn::transpose(score));
  return AttentionResult{a, nn::matmul(a, z)};
}

Gate::Gate(nn::ParameterStore& store, const std::string& prefix, int input_dim, nn::Rng& init)
    : lin_(store, prefix, input_dim, 2, init) {}

Var Gate::weights(Var gate_input) const { return nn::softmax_rows(lin_(gate_input)); }

Var gate_combine(Var w, Var e_s, Var e_t) {
  if (e_s.rows() != e_t.rows() || e_s.cols() != e_t.cols()) throw InputError("gate_combine: dimension mismatch");
  if (w.rows() != 1 || w.cols() != 2) throw InputError("gate_combine: expects 1x2 gate weights");
  Var ws = nn::element(w, 0, 0);
  Var wt = nn::element(w, 0, 1);
  // Broadcast the scalar weights by a 1x1 matmul.
  return nn::add(nn::matmul(ws, e_s), nn::matmul(wt, e_t));
}

Var gate_combine(const Gate& gate, Var gate_input, Var e_s, Var e_t) {
  return gate_combine(gate.weights(gate_input), e_s, e_t);
}

IFCDBlock::IFCDBlock(nn::ParameterStore& store, const std::string& prefix, BlockConfig cfg,
                     std::vector<TaskId> tasks, nn::Rng& init)
    : cfg_(cfg), tasks_(std::move(tasks)) {
  if (tasks_.empty()) throw InputError("ifcd: block needs at least one task");
  shared_ = Expert(store, prefix + ".shared", cfg.input_dim, cfg.lstm_dim, init, cfg.mask_c);
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!index_.emplace(tasks_[i], i).second) throw InputError("ifcd: duplicate task");
    const std::string p = prefix + "." + task_name(tasks_[i]);
    experts_.emplace_back(store, p + ".expert", cfg.input_dim, cfg.lstm_dim, init, cfg.mask_c);
    gates_.emplace_back(store, p + ".gate", cfg.gate_dim, init);
  }
  log_sigma_ = &store.create(prefix + ".log_sigma", Matrix::Zero(1, static_cast<nn::Index>(tasks_.size())));
}

std::size_t IFCDBlock::slot(TaskId t) const {
  auto it = index_.find(t);
  if (it == index_.end()) throw InputError(std::string("ifcd: task not in block: ") + task_name(t));
  return it->second;
}

double IFCDBlock::sigma(TaskId t) const { return std::exp(log_sigma_->value()(0, static_cast<nn::Index>(slot(t)))); }

Var IFCDBlock::forward(Var seq, const Matrix& mask, Var gate_input, TaskId task) const {
  const std::size_t i = slot(task);
  Var e_s = shared_.forward(seq, mask);
  Var e_t = experts_[i].forward(seq, mask);
  return gate_combine(gates_[i], gate_input, e_s, e_t);
}

std::map<TaskId, Var> IFCDBlock::forward_all(Var seq, const Matrix& mask, Var gate_input) const {
  Var e_s = shared_.forward(seq, mask);
  std::map<TaskId, Var> out;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    out.emplace(tasks_[i], gate_combine(gates_[i], gate_input, e_s, experts_[i].forward(seq, mask)));
  }
  return out;
}

Var IFCDBlock::loss(nn::Graph& g, const std::map<TaskId, Var>& losses) const {
  Var s = g.param(*log_sigma_);
  std::vector<Var> inputs{s};
  std::vector<nn::Index> cols;
  for (const auto& [task, l] : losses) {
    inputs.push_back(l);
    cols.push_back(static_cast<nn::Index>(slot(task)));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double l = inputs[k + 1].scalar();
    const double s2 = std::exp(2.0 * s.value()(0, cols[k]));
    total += 0.5 * l + 0.5 * (l / (2.0 * s2) + std::log1p(s2));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  return g.make(std::move(out), inputs, [&g, inputs, cols](int self) {
    const double d = g.grad(self)(0, 0);
    const Var s = inputs[0];
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const Var l = inputs[k + 1];
      const double lv = g.value(l.id)(0, 0);
      const double s2 = std::exp(2.0 * g.value(s.id)(0, cols[k]));
      if (g.needs_grad(l.id)) g.grad(l.id)(0, 0) += d * (0.5 + 0.25 / s2);
      if (g.needs_grad(s.id)) g.grad(s.id)(0, cols[k]) += d * 0.5 * (-lv / s2 + 2.0 * s2 / (1.0 + s2));
    }
  });
}

namespace {

void check_inputs(const std::map<TaskId, double>& losses, const std::map<TaskId, double>& sigma) {
  for (const auto& [t, l] : losses) {
    if (!std::isfinite(l)) throw NumericError(std::string("ifcd_loss: non-finite loss for ") + task_name(t));
    auto it = sigma.find(t);
    if (it == sigma.end()) throw InputError(std::string("ifcd_loss: missing sigma for ") + task_name(t));
    if (!(it->second > 0.0)) throw InputError(std::string("ifcd_loss: sigma must be positive for ") + task_name(t));
  }
}

}  // namespace

double awl(const std::map<TaskId, double>& losses, const std::map<TaskId, double>& sigma) {
  check_inputs(losses, sigma);
  double out = 0.0;
  for (const auto& [t, l] : losses) {
    const double s2 = sigma.at(t) * sigma.at(t);
    out += l / (2.0 * s2) + std::log1p(s2);
  }
  return out;
}

double ifcd_loss(const std::map<TaskId, double>& losses, const std::map<TaskId, double>& sigma) {
  double sum = 0.0;
  for (const auto& [t, l] : losses) sum += l;
  return 0.5 * sum + 0.5 * awl(losses, sigma);
}

}  // namespace cfcdc::ifcd
