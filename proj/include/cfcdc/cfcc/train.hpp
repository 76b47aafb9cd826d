#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <vector>

#include "cfcdc/cfcc/cfcc.hpp"
#include "cfcdc/cfcd/cfcd.hpp"
#include "cfcdc/data/cache.hpp"
#include "cfcdc/nn/optim.hpp"

namespace cfcdc::cfcc {

struct CoupleConfig {
  nn::AdamConfig adam;
  int epochs = 30;
  int batch_size = 16;
  double target_accuracy = 0.99;
  std::uint64_t seed = 7;
  // Backpropagate into the three CFCD modules as well.
  bool finetune_all = false;
};

// Per-task train accuracy of the coupled expert alone, in eval mode.
using CoupledAccuracy = std::map<ifcd::TaskId, double>;
double min_accuracy(const CoupledAccuracy& a);

struct CoupleEpochLog {
  int epoch = 0;
  double loss = 0.0;
  CoupledAccuracy accuracy;
  double seconds = 0.0;
};

struct CoupleHooks {
  std::function<void(const CoupleEpochLog&)> on_epoch;
  std::ostream* log = nullptr;
};

struct CoupleModules {
  cfcd::CFCDModule* select = nullptr;
  cfcd::CFCDModule* where = nullptr;
  cfcd::CFCDModule* sw = nullptr;
};

// Cross-entropy on the six coupled tasks, averaged over candidates and
// combined by the two blocks' auto-weighted losses. With finetune_all off the
// CFCD modules are frozen and their pooled vectors are computed once.
std::vector<CoupleEpochLog> train_cfcc(CFCCModel& model, const CoupleModules& modules,
                                       const std::vector<data::PreparedExample>& examples, const CoupleConfig& cfg,
                                       const CoupleHooks& hooks = {});

CoupledAccuracy coupled_accuracy(const CFCCModel& model, const CoupleModules& modules,
                                 const std::vector<data::PreparedExample>& examples);

}  // namespace cfcdc::cfcc
