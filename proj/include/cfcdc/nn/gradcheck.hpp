#pragma once

#include <functional>
#include <vector>

#include "cfcdc/nn/graph.hpp"

namespace cfcdc::nn {

struct GradProbe {
  const Parameter* param = nullptr;
  Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

// Builds the scalar loss on a fresh graph. Must be deterministic.
using LossFn = std::function<Var(Graph&)>;

// Compares backprop against central differences at `probes` randomly chosen
// scalar entries of `params`. rel_error = |a - n| / max(|a| + |n|, floor).
std::vector<GradProbe> gradient_check(const LossFn& loss, const std::vector<Parameter*>& params, int probes,
                                      std::uint64_t seed, double step = 1e-5, double floor = 1e-7);

double max_rel_error(const std::vector<GradProbe>& probes);

}  // namespace cfcdc::nn
