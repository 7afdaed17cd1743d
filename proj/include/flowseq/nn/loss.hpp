#pragma once

#include <span>

#include "flowseq/nn/types.hpp"

namespace flowseq::nn {

struct ClassWeights {
  double benign = 1.0;
  double malicious = 1.0;

  double operator[](int label) const { return label ? malicious : benign; }
  bool operator==(const ClassWeights&) const = default;
};

// Two-class softmax with max subtraction.
Eigen::Vector2d softmax2(const Eigen::Vector2d& scores);

struct LossGrad {
  double loss = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
};

// loss = -w[label] * log softmax(scores)[label]; grad = w[label] * (softmax - onehot).
// Throws NumericError on non-finite scores.
LossGrad weighted_cross_entropy(const Eigen::Vector2d& scores, int label, const ClassWeights& w);

// Mean weighted cross-entropy over the columns of a 2 x n score matrix. `grad`
// receives d(mean loss)/d(scores).
double weighted_cross_entropy(const Mat& scores, std::span<const int> labels, const ClassWeights& w,
                              Mat* grad);

}  // namespace flowseq::nn
