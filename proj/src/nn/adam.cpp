#include "flowseq/nn/adam.hpp"

#include <cmath>

#include "flowseq/error.hpp"

namespace flowseq::nn {

AdamState AdamState::for_params(const ConstParamList& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.push_back(Vec::Zero(static_cast<Index>(p.size())));
    s.v.push_back(Vec::Zero(static_cast<Index>(p.size())));
  }
  return s;
}

void adam_step(const ParamList& params, const ConstParamList& grads, AdamState& state,
               const AdamConfig& c) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ConfigError("adam: parameter, gradient and state layouts differ");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() || static_cast<Index>(params[k].size()) != state.m[k].size())
      throw ConfigError("adam: block " + std::to_string(k) + " has mismatched sizes");
    for (double g : grads[k])
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter block " + std::to_string(k));
  }
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");

  ++state.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    auto p = params[k];
    auto g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto ii = static_cast<Index>(i);
      m[ii] = c.beta1 * m[ii] + (1.0 - c.beta1) * g[i];
      v[ii] = c.beta2 * v[ii] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[ii] / bc1;
      const double vhat = v[ii] / bc2;
      p[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace flowseq::nn
