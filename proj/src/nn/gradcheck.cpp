#include "flowseq/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "flowseq/error.hpp"
#include "flowseq/nn/fnn.hpp"
#include "flowseq/nn/loss.hpp"
#include "flowseq/nn/lstm.hpp"

namespace flowseq::nn {

double relative_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

GradcheckResult finite_diff_gradcheck(const std::function<double()>& loss, const ParamList& params,
                                      const ConstParamList& analytic, const GradcheckOptions& opt,
                                      const std::function<std::uint64_t()>& pattern) {
  if (params.size() != analytic.size()) throw ConfigError("gradcheck: parameter/gradient layouts differ");
  Rng rng(opt.seed);
  GradcheckResult r;
  const std::uint64_t base_pattern = pattern ? pattern() : 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    if (p.size() != analytic[k].size()) throw ConfigError("gradcheck: block sizes differ");
    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (opt.samples_per_block > 0 && opt.samples_per_block < idx.size()) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opt.samples_per_block);
      std::sort(idx.begin(), idx.end());
    }
    for (auto i : idx) {
      const double saved = p[i];
      p[i] = saved + opt.eps;
      const double up = loss();
      const bool kink_up = pattern && pattern() != base_pattern;
      p[i] = saved - opt.eps;
      const double down = loss();
      const bool kink_down = pattern && pattern() != base_pattern;
      p[i] = saved;
      if (kink_up || kink_down) {
        ++r.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double err = relative_error(analytic[k][i], numeric, opt.floor);
      ++r.checked;
      if (err > r.max_rel_error || !std::isfinite(err)) {
        r.max_rel_error = std::isfinite(err) ? err : INFINITY;
        r.worst_block = k;
        r.worst_index = i;
        r.worst_analytic = analytic[k][i];
        r.worst_numeric = numeric;
      }
    }
  }
  return r;
}

namespace {

struct Problem {
  Mat x;
  std::vector<int> labels;
  ClassWeights weights{1.0, 3.0};
};

Problem random_problem(std::size_t width, std::size_t steps, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Problem pr;
  pr.x.resize(static_cast<Index>(width), static_cast<Index>(steps));
  for (Index j = 0; j < pr.x.cols(); ++j)
    for (Index i = 0; i < pr.x.rows(); ++i) pr.x(i, j) = nd(rng);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t t = 0; t < steps; ++t) pr.labels.push_back(coin(rng) ? 1 : 0);
  // both classes present so both weights participate
  if (steps >= 2) {
    pr.labels[0] = 0;
    pr.labels[1] = 1;
  }
  return pr;
}

std::uint64_t relu_pattern(const FnnCache& cache) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& a : cache.acts)
    for (Index i = 0; i < a.size(); ++i) {
      h ^= a.data()[i] > 0.0 ? 1u : 0u;
      h *= 1099511628211ULL;
    }
  return h;
}

}  // namespace

GradcheckResult gradcheck_fnn(const ModelCheckSpec& spec, const GradcheckOptions& options) {
  Rng rng(spec.seed);
  auto net = FnnNet::uniform(spec.input_width, spec.hidden, rng);
  const auto pr = random_problem(spec.input_width, spec.steps, rng);
  const Mode mode = spec.dropout > 0.0 ? Mode::Train : Mode::Eval;
  const std::uint64_t mask_seed = spec.seed ^ 0x9e3779b97f4a7c15ULL;

  FnnCache cache;
  auto run = [&](FnnCache* c) {
    Rng r(mask_seed);
    Mat s = fnn_forward(net, pr.x, spec.dropout, mode, &r, c);
    return s;
  };
  Mat scores = run(&cache);
  Mat dscores;
  weighted_cross_entropy(scores, pr.labels, pr.weights, &dscores);
  auto grad = FnnNet::zeros(spec.input_width, spec.hidden);
  fnn_backward(net, cache, dscores, grad, spec.fault);

  FnnCache probe;
  auto loss = [&] { return weighted_cross_entropy(run(&probe), pr.labels, pr.weights, nullptr); };
  auto pattern = [&] {
    run(&probe);
    return relu_pattern(probe);
  };
  return finite_diff_gradcheck(loss, net.params(), std::as_const(grad).params(), options, pattern);
}

GradcheckResult gradcheck_lstm(const ModelCheckSpec& spec, const GradcheckOptions& options) {
  Rng rng(spec.seed);
  auto net = LstmNet::uniform(spec.input_width, spec.hidden, rng);
  const auto pr = random_problem(spec.input_width, spec.steps, rng);
  const Mode mode = spec.dropout > 0.0 ? Mode::Train : Mode::Eval;
  const std::uint64_t mask_seed = spec.seed ^ 0x9e3779b97f4a7c15ULL;

  auto run = [&](LstmCache* c) {
    Rng r(mask_seed);
    auto state = LstmState::zeros(net);
    return stacked_lstm_forward(net, pr.x, state, spec.dropout, mode, &r, c);
  };
  LstmCache cache;
  Mat scores = run(&cache);
  Mat dscores;
  weighted_cross_entropy(scores, pr.labels, pr.weights, &dscores);
  auto grad = LstmNet::zeros(spec.input_width, spec.hidden);
  stacked_lstm_backward(net, cache, dscores, grad, spec.fault);

  auto loss = [&] { return weighted_cross_entropy(run(nullptr), pr.labels, pr.weights, nullptr); };
  return finite_diff_gradcheck(loss, net.params(), std::as_const(grad).params(), options);
}

GradcheckResult gradcheck_loss(std::uint64_t seed, const GradcheckOptions& options) {
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, 2.0);
  Vec s(2);
  s << nd(rng), nd(rng);
  const int label = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
  const ClassWeights w{1.0 + std::abs(nd(rng)), 1.0 + std::abs(nd(rng))};
  const auto lg = weighted_cross_entropy(Eigen::Vector2d(s), label, w);
  Vec g = lg.grad;
  ParamList params{view(s)};
  ConstParamList analytic{view(std::as_const(g))};
  auto loss = [&] { return weighted_cross_entropy(Eigen::Vector2d(s), label, w).loss; };
  return finite_diff_gradcheck(loss, params, analytic, options);
}

}  // namespace flowseq::nn
