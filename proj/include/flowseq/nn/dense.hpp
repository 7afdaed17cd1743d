#pragma once

#include <cstddef>

#include "flowseq/nn/types.hpp"

namespace flowseq::nn {

enum class Activation { Identity, Relu, Sigmoid };

// Fully connected layer y = act(W x + b), W is out x in.
struct DenseParams {
  Mat W;
  Vec b;

  static DenseParams zeros(std::size_t out, std::size_t in);
  // W uniform in +-1/sqrt(in), b = 0.
  static DenseParams uniform(std::size_t out, std::size_t in, Rng& rng);

  std::size_t in() const noexcept { return static_cast<std::size_t>(W.cols()); }
  std::size_t out() const noexcept { return static_cast<std::size_t>(W.rows()); }
  void set_zero();
  void append_views(ParamList& list);
  void append_views(ConstParamList& list) const;
};

double sigmoid(double x);
Vec apply_activation(Vec v, Activation a);

Vec dense_forward(const Vec& x, const DenseParams& p, Activation a);
// Column-wise over a batch (in x n).
Mat dense_forward(const Mat& x, const DenseParams& p, Activation a);

// Given the layer input, its post-activation output and dL/dy, accumulates dW/db into
// `grad` and returns dL/dx.
Mat dense_backward(const Mat& x, const Mat& y, const Mat& dy, const DenseParams& p, Activation a,
                   DenseParams& grad, BackwardFault fault = BackwardFault::None);

}  // namespace flowseq::nn
