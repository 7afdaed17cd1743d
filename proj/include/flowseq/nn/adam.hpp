#pragma once

#include <cstdint>
#include <vector>

#include "flowseq/nn/types.hpp"

namespace flowseq::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Vec> m;
  std::vector<Vec> v;
  std::uint64_t t = 0;

  // Zero moments shaped like `params`.
  static AdamState for_params(const ConstParamList& params);
};

// One bias-corrected Adam update in place. Throws NumericError on a non-finite
// gradient without touching the parameters.
void adam_step(const ParamList& params, const ConstParamList& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace flowseq::nn
