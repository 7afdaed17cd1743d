#include "flowseq/nn/dense.hpp"

#include <cmath>
#include <string>

#include "flowseq/error.hpp"

namespace flowseq::nn {

DenseParams DenseParams::zeros(std::size_t out, std::size_t in) {
  return {Mat::Zero(static_cast<Index>(out), static_cast<Index>(in)), Vec::Zero(static_cast<Index>(out))};
}

DenseParams DenseParams::uniform(std::size_t out, std::size_t in, Rng& rng) {
  DenseParams p = zeros(out, in);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Index j = 0; j < p.W.cols(); ++j)
    for (Index i = 0; i < p.W.rows(); ++i) p.W(i, j) = u(rng);
  return p;
}

void DenseParams::set_zero() {
  W.setZero();
  b.setZero();
}

void DenseParams::append_views(ParamList& list) {
  list.push_back(view(W));
  list.push_back(view(b));
}

void DenseParams::append_views(ConstParamList& list) const {
  list.push_back(view(W));
  list.push_back(view(b));
}

double sigmoid(double x) {
  // Split by sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec apply_activation(Vec v, Activation a) {
  switch (a) {
    case Activation::Identity: break;
    case Activation::Relu: v = v.cwiseMax(0.0); break;
    case Activation::Sigmoid: v = v.unaryExpr([](double z) { return sigmoid(z); }); break;
  }
  return v;
}

namespace {

void check_shape(Index rows, const DenseParams& p) {
  if (rows != p.W.cols())
    throw ConfigError("dense layer expects input width " + std::to_string(p.W.cols()) + ", got " +
                      std::to_string(rows));
}

}  // namespace

Vec dense_forward(const Vec& x, const DenseParams& p, Activation a) {
  check_shape(x.size(), p);
  return apply_activation(p.W * x + p.b, a);
}

Mat dense_forward(const Mat& x, const DenseParams& p, Activation a) {
  check_shape(x.rows(), p);
  Mat z = p.W * x;
  z.colwise() += p.b;
  switch (a) {
    case Activation::Identity: break;
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Sigmoid: z = z.unaryExpr([](double v) { return sigmoid(v); }); break;
  }
  return z;
}

Mat dense_backward(const Mat& x, const Mat& y, const Mat& dy, const DenseParams& p, Activation a,
                   DenseParams& grad, BackwardFault fault) {
  Mat dz;
  switch (a) {
    case Activation::Identity: dz = dy; break;
    case Activation::Relu:
      dz = fault == BackwardFault::SkipReluMask ? dy
                                               : Mat(dy.array() * (y.array() > 0.0).cast<double>());
      break;
    case Activation::Sigmoid: dz = dy.array() * y.array() * (1.0 - y.array()); break;
  }
  grad.W.noalias() += dz * x.transpose();
  grad.b += dz.rowwise().sum();
  return p.W.transpose() * dz;
}

}  // namespace flowseq::nn
