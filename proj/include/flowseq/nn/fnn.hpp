#pragma once

#include <cstddef>
#include <vector>

#include "flowseq/nn/dense.hpp"
#include "flowseq/nn/types.hpp"

namespace flowseq::nn {

// Feedforward stack: each hidden layer is dense + ReLU followed by dropout, then a
// linear output layer.
struct FnnNet {
  std::vector<DenseParams> hidden;
  DenseParams out;

  static FnnNet zeros(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t classes = 2);
  static FnnNet uniform(std::size_t input, const std::vector<std::size_t>& hidden, Rng& rng,
                        std::size_t classes = 2);

  std::size_t input_width() const { return hidden.empty() ? out.in() : hidden.front().in(); }
  std::vector<std::size_t> hidden_sizes() const;
  ParamList params();
  ConstParamList params() const;
  void set_zero();
};

struct FnnCache {
  std::vector<Mat> inputs;  // input to each hidden layer
  std::vector<Mat> acts;    // post-ReLU, pre-dropout
  std::vector<Mat> masks;
  Mat top;                  // input to the output layer
  Mat scores;
};

// x is in x n (one record per column); returns 2 x n scores.
Mat fnn_forward(const FnnNet& net, const Mat& x, double dropout_p, Mode mode, Rng* rng,
                FnnCache* cache = nullptr);

void fnn_backward(const FnnNet& net, const FnnCache& cache, const Mat& dscores, FnnNet& grad,
                  BackwardFault fault = BackwardFault::None);

}  // namespace flowseq::nn
