#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfcdc/data/schema.hpp"
#include "cfcdc/encoder/encoder.hpp"
#include "cfcdc/ifcd/ifcd.hpp"

namespace cfcdc::cfcd {

enum class ClauseRole { kSelect, kWhere, kSw };

const char* role_name(ClauseRole r);
ClauseRole role_from_name(const std::string& name);  // throws InputError
int max_num(ClauseRole r);                            // largest clause count the num head predicts
std::vector<ifcd::TaskId> role_tasks(ClauseRole r);
ifcd::TaskId rank_task(ClauseRole r);
ifcd::TaskId num_task(ClauseRole r);

struct RDropConfig {
  double lambda = 0.5;
  double mu = 0.5;
  double prob_floor = 1e-8;
  bool symmetric = true;  // false: one-sided KL(t1 || t2)

  void validate() const;
};

struct FGMConfig {
  double epsilon = 1.0;
  bool enabled = true;
};

struct ModuleConfig {
  ClauseRole role = ClauseRole::kSelect;
  encoder::EncoderConfig encoder;
  bool use_ifcd = true;
  int lstm_dim = 64;
  double mask_c = 1e4;
  std::uint64_t init_seed = 7;
};

nlohmann::json to_json(const ModuleConfig& cfg);
ModuleConfig module_config_from_json(const nlohmann::json& j);

// Graph outputs of one forward pass over a candidate. Distributions are 1xK rows.
struct HeadOutputs {
  nn::Var rank;                 // [P(not in clause), P(in clause)]
  nn::Var num;                  // over 0..max_num
  std::optional<nn::Var> cls;   // agg (SELECT) or op (WHERE)
  std::optional<nn::Var> start; // over question tokens (WHERE)
  std::optional<nn::Var> end;
  nn::Var pooled;
};

// Plain-value outputs of an eval-mode pass.
struct CandidateScores {
  double relevance = 0.5;
  nn::Matrix num;
  nn::Matrix cls;
  nn::Matrix start;
  nn::Matrix end;
  nn::Matrix pooled;
};

// One clause role's encoder, optional IFCD block, and heads. Each module owns
// its parameter store, so no tensor is shared between modules.
class CFCDModule {
 public:
  explicit CFCDModule(ModuleConfig cfg);
  CFCDModule(const CFCDModule&) = delete;
  CFCDModule& operator=(const CFCDModule&) = delete;

  HeadOutputs forward(nn::Graph& g, const data::TokenizedInput& tokens, nn::Rng* dropout) const;
  HeadOutputs forward(nn::Graph& g, const encoder::EncodedSequence& enc, int question_start,
                      int question_length) const;

  CandidateScores score(const data::TokenizedInput& tokens) const;
  double rank_score(const data::TokenizedInput& tokens) const { return score(tokens).relevance; }

  const ModuleConfig& config() const { return cfg_; }
  ClauseRole role() const { return cfg_.role; }
  const encoder::Encoder& encoder() const { return encoder_; }
  const ifcd::IFCDBlock* block() const { return block_ ? &*block_ : nullptr; }
  nn::ParameterStore& store() { return *store_; }
  const nn::ParameterStore& store() const { return *store_; }
  const nn::Linear& rank_head() const { return rank_head_; }
  const nn::Linear& num_head() const { return num_head_; }

 private:
  ModuleConfig cfg_;
  std::unique_ptr<nn::ParameterStore> store_;
  encoder::Encoder encoder_;
  std::optional<ifcd::IFCDBlock> block_;
  nn::Linear rank_head_;
  nn::Linear num_head_;
  nn::Linear cls_head_;
  nn::Linear start_head_;
  nn::Linear end_head_;
};

// Per-candidate training targets for one role. -1 marks an absent target.
struct CandidateLabels {
  int relevant = 0;
  int num = 0;
  int cls = -1;
  int span_start = -1;  // question-token index
  int span_end = -1;
};

std::vector<CandidateLabels> role_labels(ClauseRole role, const data::NLExample& ex,
                                         const std::vector<data::TokenizedInput>& candidates);

// Question-token span [start, end] whose words equal `value`'s words, or nullopt.
std::optional<std::pair<int, int>> find_value_span(const std::string& question, const std::string& value,
                                                   int max_tokens);

// n = argmax_n sum_i relevance_i * num_i(n); ties go to the smaller n.
// Throws InputError on empty input or a distribution not summing to 1.
int predict_num(const std::vector<std::pair<double, nn::Matrix>>& per_column);

// ---- R-drop ---------------------------------------------------------------

double kl(const nn::Matrix& p, const nn::Matrix& q);
double kl_sym(const nn::Matrix& p, const nn::Matrix& q);
nn::Matrix floor_renormalize(const nn::Matrix& p, double eps);
nn::Matrix softmax(const nn::Matrix& logits);

struct RDropTerms {
  double loss1 = 0.0;
  double loss2 = 0.0;  // already scaled by lambda
  double loss3 = 0.0;  // already scaled by mu
  double total() const { return loss1 + loss2 + loss3; }
};

// loss1 = mean CE of the two passes, loss2 = lambda * KL(t1, t2),
// loss3 = mu * KL(softmax b1, softmax b2). Throws NumericError on non-finite input.
RDropTerms rdrop_loss(const nn::Matrix& t1, const nn::Matrix& t2, const nn::Matrix& b1, const nn::Matrix& b2,
                      int label, const RDropConfig& cfg);

// Graph forms used in training. Inputs are unfloored distribution rows.
nn::Var kl_term(nn::Var p, nn::Var q, const RDropConfig& cfg);
nn::Var pooled_kl_term(nn::Var b1, nn::Var b2, const RDropConfig& cfg);

// ---- FGM ------------------------------------------------------------------

struct FGMResult {
  bool applied = false;
  double perturbation_norm = 0.0;
  double adversarial_loss = 0.0;
};

// Adds r = eps * g / ||g|| to `embedding`, runs `adversarial_pass` (which
// returns its loss and may accumulate gradients), then restores the table
// exactly. Skips when disabled or when g is missing or zero.
FGMResult fgm_step(nn::Parameter& embedding, const nn::Gradients& grads, const FGMConfig& cfg,
                   const std::function<double()>& adversarial_pass);

}  // namespace cfcdc::cfcd
