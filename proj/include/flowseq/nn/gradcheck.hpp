#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "flowseq/nn/types.hpp"

namespace flowseq::nn {

struct GradcheckOptions {
  double eps = 1e-5;
  std::size_t samples_per_block = 0;  // 0 checks every coordinate
  std::uint64_t seed = 0;
  double floor = 1e-6;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose perturbation crossed a ReLU kink
  std::size_t worst_block = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Compares `analytic` against central differences of `loss` while nudging each sampled
// coordinate of `params` in place (restored afterwards). If `pattern` is given, a
// coordinate is skipped when either nudge changes the pattern it reports.
GradcheckResult finite_diff_gradcheck(const std::function<double()>& loss, const ParamList& params,
                                      const ConstParamList& analytic, const GradcheckOptions& options = {},
                                      const std::function<std::uint64_t()>& pattern = {});

struct ModelCheckSpec {
  std::size_t input_width = 6;
  std::vector<std::size_t> hidden = {8, 8};
  std::size_t steps = 5;
  std::uint64_t seed = 1;
  double dropout = 0.0;  // > 0 runs train mode with masks frozen by reseeding
  BackwardFault fault = BackwardFault::None;
};

GradcheckResult gradcheck_fnn(const ModelCheckSpec& spec, const GradcheckOptions& options = {});
GradcheckResult gradcheck_lstm(const ModelCheckSpec& spec, const GradcheckOptions& options = {});
// Weighted cross-entropy with respect to random scores.
GradcheckResult gradcheck_loss(std::uint64_t seed, const GradcheckOptions& options = {});

}  // namespace flowseq::nn
