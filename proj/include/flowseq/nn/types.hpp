#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace flowseq::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

enum class Mode { Train, Eval };

// Flat views over parameter (or gradient) storage, in a model's declared order.
using ParamList = std::vector<std::span<double>>;
using ConstParamList = std::vector<std::span<const double>>;

inline std::span<double> view(Mat& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> view(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> view(const Mat& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> view(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline ConstParamList as_const(const ParamList& p) {
  ConstParamList out;
  out.reserve(p.size());
  for (auto s : p) out.emplace_back(s.data(), s.size());
  return out;
}

// Deliberate backward-pass defects, used to prove the gradient checker catches them.
enum class BackwardFault { None, DropCellCarry, SkipReluMask };

}  // namespace flowseq::nn
