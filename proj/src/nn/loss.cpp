#include "flowseq/nn/loss.hpp"

#include <cmath>
#include <string>

#include "flowseq/error.hpp"

namespace flowseq::nn {

Eigen::Vector2d softmax2(const Eigen::Vector2d& s) {
  const double m = s.maxCoeff();
  const double e0 = std::exp(s[0] - m);
  const double e1 = std::exp(s[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

LossGrad weighted_cross_entropy(const Eigen::Vector2d& scores, int label, const ClassWeights& w) {
  if (!std::isfinite(scores[0]) || !std::isfinite(scores[1]))
    throw NumericError("non-finite class scores");
  if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
  if (!(w.benign > 0.0 && w.malicious > 0.0)) throw ConfigError("class weights must be > 0");
  const double m = scores.maxCoeff();
  const double lse = m + std::log(std::exp(scores[0] - m) + std::exp(scores[1] - m));
  const double wl = w[label];
  LossGrad out;
  out.loss = -wl * (scores[label] - lse);
  out.grad = wl * softmax2(scores);
  out.grad[label] -= wl;
  return out;
}

double weighted_cross_entropy(const Mat& scores, std::span<const int> labels, const ClassWeights& w,
                              Mat* grad) {
  if (scores.rows() != 2 || static_cast<std::size_t>(scores.cols()) != labels.size())
    throw ConfigError("score matrix must be 2 x n with n labels");
  const auto n = scores.cols();
  if (grad) grad->resize(2, n);
  if (n == 0) return 0.0;
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  for (Index t = 0; t < n; ++t) {
    const auto lg = weighted_cross_entropy(Eigen::Vector2d(scores.col(t)), labels[static_cast<std::size_t>(t)], w);
    total += lg.loss;
    if (grad) grad->col(t) = lg.grad * inv;
  }
  return total * inv;
}

}  // namespace flowseq::nn
