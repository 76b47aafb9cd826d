#pragma once

#include <map>
#include <string>
#include <vector>

#include "cfcdc/nn/layers.hpp"

namespace cfcdc::ifcd {

enum class TaskId {
  kSelRank,
  kSelAgg,
  kSelNum,
  kWhrRank,
  kWhrOp,
  kWhrNum,
  kWhrValStart,
  kWhrValEnd,
  kSwRank,
  kSwNum,
};

const char* task_name(TaskId t);

struct AttentionResult {
  nn::Var weights;  // 1 x n, sums to 1
  nn::Var pooled;   // 1 x dim(z)
};

// Bi-LSTM followed by masked attention pooling.
class Expert {
 public:
  Expert() = default;
  Expert(nn::ParameterStore& store, const std::string& prefix, int input_dim, int lstm_dim, nn::Rng& init,
         double mask_c = 1e4);

  nn::Var bilstm(nn::Var b) const;  // n x 2*lstm_dim, forward then backward channels
  // mask is n x 1 binary; throws InputError when it has no 1 entry.
  AttentionResult attention_pool(nn::Var z, const nn::Matrix& mask) const;
  nn::Var forward(nn::Var b, const nn::Matrix& mask) const { return attention_pool(bilstm(b), mask).pooled; }

  int output_dim() const { return 2 * lstm_dim_; }
  std::vector<nn::Parameter*> parameters() const;

  nn::Parameter* fw_wx = nullptr;
  nn::Parameter* fw_wh = nullptr;
  nn::Parameter* fw_b = nullptr;
  nn::Parameter* bw_wx = nullptr;
  nn::Parameter* bw_wh = nullptr;
  nn::Parameter* bw_b = nullptr;
  nn::Parameter* att_w = nullptr;
  nn::Parameter* att_theta = nullptr;

 private:
  int lstm_dim_ = 0;
  double c_ = 1e4;
};

// Softmax over two logits computed from the gate input.
class Gate {
 public:
  Gate() = default;
  Gate(nn::ParameterStore& store, const std::string& prefix, int input_dim, nn::Rng& init);

  nn::Var weights(nn::Var gate_input) const;  // 1 x 2
  const nn::Linear& linear() const { return lin_; }

 private:
  nn::Linear lin_;
};

// w(0,0) * e_s + w(0,1) * e_t. Throws InputError on a dimension mismatch.
nn::Var gate_combine(nn::Var weights, nn::Var e_s, nn::Var e_t);
nn::Var gate_combine(const Gate& gate, nn::Var gate_input, nn::Var e_s, nn::Var e_t);

struct BlockConfig {
  int input_dim = 128;
  int gate_dim = 128;
  int lstm_dim = 64;
  double mask_c = 1e4;
};

// One shared expert plus one expert and gate per task, and per-task
// uncertainty weights stored as log sigma.
class IFCDBlock {
 public:
  IFCDBlock() = default;
  IFCDBlock(nn::ParameterStore& store, const std::string& prefix, BlockConfig cfg, std::vector<TaskId> tasks,
            nn::Rng& init);

  // Task feature replacing the pooled vector for that task's head.
  nn::Var forward(nn::Var seq, const nn::Matrix& mask, nn::Var gate_input, TaskId task) const;
  // All task features, sharing one shared-expert evaluation.
  std::map<TaskId, nn::Var> forward_all(nn::Var seq, const nn::Matrix& mask, nn::Var gate_input) const;

  // 0.5 * sum l + 0.5 * awl over the tasks present in `losses`.
  nn::Var loss(nn::Graph& g, const std::map<TaskId, nn::Var>& losses) const;

  bool has_task(TaskId t) const { return index_.contains(t); }
  const std::vector<TaskId>& tasks() const { return tasks_; }
  int output_dim() const { return shared_.output_dim(); }
  const Expert& shared_expert() const { return shared_; }
  const Expert& expert(TaskId t) const { return experts_.at(slot(t)); }
  const Gate& gate(TaskId t) const { return gates_.at(slot(t)); }
  nn::Parameter& log_sigma() const { return *log_sigma_; }
  double sigma(TaskId t) const;

 private:
  std::size_t slot(TaskId t) const;

  BlockConfig cfg_;
  std::vector<TaskId> tasks_;
  std::map<TaskId, std::size_t> index_;
  Expert shared_;
  std::vector<Expert> experts_;
  std::vector<Gate> gates_;
  nn::Parameter* log_sigma_ = nullptr;
};

// awl = sum_t l_t / (2 sigma_t^2) + ln(1 + sigma_t^2).
double awl(const std::map<TaskId, double>& losses, const std::map<TaskId, double>& sigma);
// 0.5 * sum l + 0.5 * awl. Throws InputError for sigma <= 0 or non-finite l.
double ifcd_loss(const std::map<TaskId, double>& losses, const std::map<TaskId, double>& sigma);

}  // namespace cfcdc::ifcd
