#include "flowseq/nn/dropout.hpp"

#include <cmath>

#include "flowseq/error.hpp"

namespace flowseq::nn {

void check_dropout_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
}

Mat dropout(const Mat& x, double p, Rng& rng, Mode mode, Mat* mask) {
  check_dropout_rate(p);
  if (mode == Mode::Eval || p == 0.0) {
    if (mask) *mask = Mat::Ones(x.rows(), x.cols());
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat m(x.rows(), x.cols());
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng) < p ? 0.0 : keep_scale;
  Mat y = x.cwiseProduct(m);
  if (mask) *mask = std::move(m);
  return y;
}

Vec dropout(const Vec& x, double p, Rng& rng, Mode mode) {
  Mat y = dropout(Mat(x), p, rng, mode);
  return y.col(0);
}

}  // namespace flowseq::nn
