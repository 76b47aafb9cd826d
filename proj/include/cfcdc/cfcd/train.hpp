#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cfcdc/cfcd/cfcd.hpp"
#include "cfcdc/data/cache.hpp"
#include "cfcdc/nn/optim.hpp"

namespace cfcdc::cfcd {

struct TrainConfig {
  nn::AdamConfig adam;
  int epochs = 50;
  int batch_size = 16;
  // Stop once every train accuracy of the role reaches this value; > 1 disables.
  double target_accuracy = 0.99;
  std::uint64_t seed = 7;
};

struct LossTerms {
  double loss1 = 0.0;
  double loss2 = 0.0;
  double loss3 = 0.0;
  double total = 0.0;
};

// Train-split accuracies of one module in eval mode.
struct RoleAccuracy {
  double relevance = 0.0;  // per-candidate, threshold 0.5
  double ranking = 0.0;    // per-example: top-|gold| columns equal the gold set
  double num = 0.0;
  double cls = 1.0;        // agg or op on gold columns
  double span = 1.0;       // exact value span on gold where columns
  double min() const;
};

RoleAccuracy role_accuracy(const CFCDModule& module, const std::vector<data::PreparedExample>& examples);

struct EpochLog {
  int epoch = 0;
  LossTerms loss;          // mean over examples
  double adversarial = 0.0;
  RoleAccuracy accuracy;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  double final_loss = 0.0;
};

struct ExampleLoss {
  nn::Var total;
  LossTerms terms;
};

// Two dropout passes per candidate; per-task losses are candidate means of
// cross-entropy plus lambda * KL, combined by the IFCD auto-weighted loss when
// the module has a block (a plain sum otherwise), plus mu * pooled KL.
ExampleLoss example_loss(nn::Graph& g, const CFCDModule& module, const data::PreparedExample& ex,
                         const std::vector<CandidateLabels>& labels, const RDropConfig& rdrop,
                         std::uint64_t seed_a, std::uint64_t seed_b);

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::ostream* log = nullptr;  // one line per optimizer step and per epoch
};

// Deterministic given cfg.seed. Throws NumericError on a non-finite loss.
TrainResult train_cfcd(CFCDModule& module, const std::vector<data::PreparedExample>& examples,
                       const RDropConfig& rdrop, const FGMConfig& fgm, const TrainConfig& cfg,
                       const TrainHooks& hooks = {});

}  // namespace cfcdc::cfcd
