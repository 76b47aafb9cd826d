#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfcdc/ifcd/ifcd.hpp"
#include "cfcdc/sql/query.hpp"

namespace cfcdc::cfcc {

// OS = [pooled_select, pooled_sw], OW = [pooled_where, pooled_sw] for one candidate column.
struct CoupledInputs {
  int column = 0;
  nn::Matrix os;  // 1 x 2h
  nn::Matrix ow;  // 1 x 2h
};

// Throws InputError when the column indices differ or a pooled row has a bad shape.
CoupledInputs build_coupled_vectors(const nn::Matrix& pooled_sel, int col_sel, const nn::Matrix& pooled_where,
                                    int col_where, const nn::Matrix& pooled_sw, int col_sw);

struct VotingConfig {
  double alpha = 0.5;  // weight on the coupled expert distribution
  std::map<ifcd::TaskId, double> per_task;

  double alpha_for(ifcd::TaskId t) const;
  void validate() const;
};

// alpha * expert + (1 - alpha) * cfcd. Throws InputError on a support mismatch.
nn::Matrix weighted_vote(const nn::Matrix& expert_dist, const nn::Matrix& cfcd_dist, double alpha);

struct CFCCConfig {
  int hidden_dim = 128;  // pooled width of each CFCD encoder
  int lstm_dim = 64;
  double mask_c = 1e4;
  std::uint64_t init_seed = 7;
};

nlohmann::json to_json(const CFCCConfig& c);
CFCCConfig cfcc_config_from_json(const nlohmann::json& j);

// Distributions for the six coupled tasks of one candidate.
struct CoupledOutputs {
  nn::Var sel_rank;  // 1x2
  nn::Var sel_agg;   // 1x6
  nn::Var sel_num;   // 1x2
  nn::Var whr_rank;  // 1x2
  nn::Var whr_op;    // 1x3
  nn::Var whr_num;   // 1x5

  nn::Var dist(ifcd::TaskId t) const;
};

const std::vector<ifcd::TaskId>& select_tasks();
const std::vector<ifcd::TaskId>& where_tasks();

// Shared and task experts over the two pooled parts of OS / OW, treated as a
// length-2 sequence; the gate reads the full concatenated vector.
class CFCCModel {
 public:
  explicit CFCCModel(CFCCConfig cfg);
  CFCCModel(const CFCCModel&) = delete;
  CFCCModel& operator=(const CFCCModel&) = delete;

  CoupledOutputs forward(nn::Graph& g, nn::Var pooled_sel, nn::Var pooled_where, nn::Var pooled_sw) const;
  // Eval-mode distribution for one task. SELECT tasks read OS, WHERE tasks read OW.
  nn::Matrix coupled_predict(const CoupledInputs& in, ifcd::TaskId task) const;

  nn::Var loss(nn::Graph& g, const std::map<ifcd::TaskId, nn::Var>& task_losses) const;

  const CFCCConfig& config() const { return cfg_; }
  nn::ParameterStore& store() { return *store_; }
  const nn::ParameterStore& store() const { return *store_; }
  const ifcd::IFCDBlock& select_block() const { return select_block_; }
  const ifcd::IFCDBlock& where_block() const { return where_block_; }

 private:
  std::map<ifcd::TaskId, nn::Var> block_features(const ifcd::IFCDBlock& block, nn::Var own, nn::Var sw) const;

  CFCCConfig cfg_;
  std::unique_ptr<nn::ParameterStore> store_;
  ifcd::IFCDBlock select_block_;
  ifcd::IFCDBlock where_block_;
  std::map<ifcd::TaskId, nn::Linear> heads_;
};

}  // namespace cfcdc::cfcc
