#include <doctest.h>

#include <cmath>
#include <random>

#include "flowseq/error.hpp"
#include "flowseq/nn/adam.hpp"
#include "flowseq/nn/dense.hpp"
#include "flowseq/nn/dropout.hpp"
#include "flowseq/nn/fnn.hpp"
#include "flowseq/nn/gradcheck.hpp"
#include "flowseq/nn/loss.hpp"
#include "flowseq/nn/lstm.hpp"
#include "flowseq/nn/tbptt.hpp"
#include "flowseq/nn/train_config.hpp"

using namespace flowseq;
using namespace flowseq::nn;

namespace {

Mat random_mat(Index r, Index c, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = u(rng);
  return m;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Textbook cell with explicit loops over units, one gate at a time.
void naive_cell(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c,
                const LstmCellParams& p) {
  const auto H = static_cast<Index>(h.size());
  auto pre = [&](int gate, Index k) {
    const Index row = gate * H + k;
    double s = p.b[row];
    for (Index j = 0; j < static_cast<Index>(x.size()); ++j) s += p.W(row, j) * x[static_cast<std::size_t>(j)];
    for (Index j = 0; j < H; ++j) s += p.U(row, j) * h[static_cast<std::size_t>(j)];
    return s;
  };
  std::vector<double> hn(h.size()), cn(c.size());
  for (Index k = 0; k < H; ++k) {
    const double i = sig(pre(0, k)), f = sig(pre(1, k)), o = sig(pre(2, k)), g = std::tanh(pre(3, k));
    const auto kk = static_cast<std::size_t>(k);
    cn[kk] = f * c[kk] + i * g;
    hn[kk] = o * std::tanh(cn[kk]);
  }
  h = hn;
  c = cn;
}

std::vector<int> random_labels(std::size_t n, Rng& rng) {
  std::vector<int> l(n);
  for (auto& v : l) v = static_cast<int>(rng() % 2);
  return l;
}

double max_abs_diff(const ConstParamList& a, const ConstParamList& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i) m = std::max(m, std::abs(a[k][i] - b[k][i]));
  return m;
}

}  // namespace

TEST_CASE("dense_forward matches a naive loop") {
  Rng rng(1);
  auto p = DenseParams::uniform(5, 7, rng);
  p.b = random_mat(5, 1, rng);
  const Vec x = random_mat(7, 1, rng);
  for (auto act : {Activation::Identity, Activation::Relu, Activation::Sigmoid}) {
    const Vec y = dense_forward(x, p, act);
    for (Index i = 0; i < 5; ++i) {
      double s = p.b[i];
      for (Index j = 0; j < 7; ++j) s += p.W(i, j) * x[j];
      if (act == Activation::Relu) s = std::max(0.0, s);
      if (act == Activation::Sigmoid) s = sig(s);
      CHECK(y[i] == doctest::Approx(s).epsilon(1e-12));
    }
  }
  CHECK(dense_forward(x, DenseParams::zeros(3, 7), Activation::Relu).isZero());
  CHECK_THROWS_AS(dense_forward(Vec(Vec::Zero(4)), p, Activation::Identity), ConfigError);
}

TEST_CASE("lstm cell: zero-parameter examples") {
  auto p = LstmCellParams::zeros(3, 1);
  auto out = lstm_cell_step(Vec::Zero(3), Vec::Zero(1), Vec::Zero(1), p);
  CHECK(out.c[0] == 0.0);
  CHECK(out.h[0] == 0.0);
  out = lstm_cell_step(Vec::Zero(3), Vec::Zero(1), Vec::Ones(1), p);
  CHECK(out.c[0] == doctest::Approx(0.5));
  CHECK(out.h[0] == doctest::Approx(0.23106).epsilon(1e-5));
  CHECK_THROWS_AS(lstm_cell_step(Vec::Zero(2), Vec::Zero(1), Vec::Zero(1), p), ConfigError);
}

TEST_CASE("lstm cell and stack agree with a naive implementation") {
  Rng rng(2);
  auto net = LstmNet::uniform(4, {5, 3}, rng);
  for (auto& l : net.layers) l.b = random_mat(l.b.size(), 1, rng);
  const Mat x = random_mat(4, 9, rng);
  auto state = LstmState::zeros(net);
  const Mat scores = stacked_lstm_forward(net, x, state, 0.0, Mode::Eval, nullptr);

  std::vector<std::vector<double>> h = {std::vector<double>(5, 0.0), std::vector<double>(3, 0.0)};
  auto c = h;
  for (Index t = 0; t < 9; ++t) {
    std::vector<double> in(x.col(t).data(), x.col(t).data() + 4);
    naive_cell(in, h[0], c[0], net.layers[0]);
    naive_cell(h[0], h[1], c[1], net.layers[1]);
    for (Index k = 0; k < 2; ++k) {
      double s = net.out.b[k];
      for (Index j = 0; j < 3; ++j) s += net.out.W(k, j) * h[1][static_cast<std::size_t>(j)];
      CHECK(scores(k, t) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  for (Index j = 0; j < 3; ++j) CHECK(state.h[1][j] == doctest::Approx(h[1][static_cast<std::size_t>(j)]));

  // single-step API gives the same first-layer trajectory
  Vec hp = Vec::Zero(5), cp = Vec::Zero(5);
  for (Index t = 0; t < 9; ++t) {
    auto o = lstm_cell_step(x.col(t), hp, cp, net.layers[0]);
    hp = o.h;
    cp = o.c;
  }
  CHECK((hp - state.h[0]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lstm stack: zero parameters give the output bias at every step") {
  auto net = LstmNet::zeros(3, {4, 4});
  net.out.b << 0.3, -0.2;
  Rng rng(3);
  const Mat x = random_mat(3, 6, rng);
  auto st = LstmState::zeros(net);
  const Mat s = stacked_lstm_forward(net, x, st, 0.0, Mode::Eval, nullptr);
  for (Index t = 0; t < 6; ++t) {
    CHECK(s(0, t) == 0.3);
    CHECK(s(1, t) == -0.2);
  }
}

TEST_CASE("lstm gate bounds: |c_t| <= |c_{t-1}| + 1") {
  Rng rng(4);
  auto net = LstmNet::uniform(3, {6}, rng);
  net.layers[0].W *= 5.0;
  const Mat x = random_mat(3, 50, rng, 3.0);
  auto st = LstmState::zeros(net);
  LstmCache cache;
  stacked_lstm_forward(net, x, st, 0.0, Mode::Eval, nullptr, &cache);
  const auto& L = cache.layers[0];
  CHECK(L.gates.topRows(18).minCoeff() > 0.0);
  CHECK(L.gates.topRows(18).maxCoeff() < 1.0);
  CHECK(L.gates.bottomRows(6).cwiseAbs().maxCoeff() < 1.0);
  for (Index t = 0; t < 50; ++t)
    for (Index k = 0; k < 6; ++k) CHECK(std::abs(L.c(k, t)) <= std::abs(L.c_prev(k, t)) + 1.0);
}

TEST_CASE("lstm causality: truncating the sequence leaves earlier outputs unchanged") {
  Rng rng(5);
  const auto net = LstmNet::uniform(4, {6, 6}, rng);
  const Mat x = random_mat(4, 20, rng);
  auto s1 = LstmState::zeros(net);
  const Mat full = stacked_lstm_forward(net, x, s1, 0.0, Mode::Eval, nullptr);
  for (Index k : {1, 7, 13}) {
    auto s2 = LstmState::zeros(net);
    const Mat part = stacked_lstm_forward(net, x.leftCols(k), s2, 0.0, Mode::Eval, nullptr);
    CHECK(part == full.leftCols(k));
  }
}

TEST_CASE("lstm initialization") {
  Rng rng(6);
  const auto p = LstmCellParams::uniform(16, 4, rng);
  CHECK(p.W.cwiseAbs().maxCoeff() <= 0.25);
  CHECK(p.U.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(p.b_gate(Gate::Forget) == Vec::Ones(4));
  CHECK(p.b_gate(Gate::Input).isZero());
  CHECK(p.b_gate(Gate::Output).isZero());
  CHECK(p.b_gate(Gate::Candidate).isZero());
}

TEST_CASE("dropout") {
  Rng rng(7);
  const Mat x = Mat::Constant(200, 200, 2.0);
  CHECK(dropout(x, 0.0, rng, Mode::Train) == x);
  CHECK(dropout(x, 0.0, rng, Mode::Eval) == x);
  CHECK(dropout(x, 0.7, rng, Mode::Eval) == x);
  CHECK_THROWS_AS(dropout(x, 1.0, rng, Mode::Train), ConfigError);
  CHECK_THROWS_AS(dropout(x, -0.1, rng, Mode::Train), ConfigError);

  // Monte Carlo: zero fraction ~ p, survivors scaled by 1/(1-p), mean preserved
  const double p = 0.3;
  Mat mask;
  const Mat y = dropout(x, p, rng, Mode::Train, &mask);
  const double zeros = static_cast<double>((y.array() == 0.0).count()) / 40000.0;
  CHECK(zeros == doctest::Approx(p).epsilon(0.05));
  CHECK(y.mean() == doctest::Approx(2.0).epsilon(0.03));
  for (Index i = 0; i < 100; ++i) {
    if (y(i, 0) != 0.0) CHECK(y(i, 0) == doctest::Approx(2.0 / 0.7));
    CHECK(y(i, 0) == doctest::Approx(x(i, 0) * mask(i, 0)));
  }
}

TEST_CASE("weighted cross-entropy") {
  const ClassWeights w11{1, 1}, w15{1, 5};
  CHECK(weighted_cross_entropy(Eigen::Vector2d(0, 0), 1, w11).loss == doctest::Approx(0.69315).epsilon(1e-5));
  CHECK(weighted_cross_entropy(Eigen::Vector2d(0, 0), 1, w15).loss == doctest::Approx(3.46574).epsilon(1e-5));
  CHECK_THROWS_AS(weighted_cross_entropy(Eigen::Vector2d(NAN, 0), 1, w11), NumericError);

  Rng rng(8);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector2d s(nd(rng), nd(rng));
    const int label = trial % 2;
    const ClassWeights w{1.0 + std::abs(nd(rng)), 1.0 + std::abs(nd(rng))};
    const auto lg = weighted_cross_entropy(s, label, w);
    CHECK(lg.loss >= 0.0);
    const auto sm = softmax2(s);
    CHECK(std::abs(sm.sum() - 1.0) < 1e-12);
    for (int k = 0; k < 2; ++k) {
      const double eps = 1e-5;
      Eigen::Vector2d a = s, b = s;
      a[k] += eps;
      b[k] -= eps;
      const double num = (weighted_cross_entropy(a, label, w).loss - weighted_cross_entropy(b, label, w).loss) / (2 * eps);
      CHECK(relative_error(lg.grad[k], num) < 1e-6);
    }
  }
}

TEST_CASE("adam") {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  Vec w = Vec::Constant(1, 0.5);
  Vec g = Vec::Constant(1, 3.0);
  ParamList p = {view(w)};
  auto st = AdamState::for_params(nn::as_const(p));
  adam_step(p, {view(std::as_const(g))}, st, cfg);
  CHECK(w[0] == doctest::Approx(0.5 - 0.01).epsilon(1e-6));
  CHECK(st.t == 1);

  Vec z = Vec::Constant(3, 1.25);
  Vec zg = Vec::Zero(3);
  ParamList pz = {view(z)};
  auto sz = AdamState::for_params(nn::as_const(pz));
  for (int i = 0; i < 50; ++i) adam_step(pz, {view(std::as_const(zg))}, sz, cfg);
  CHECK(z == Vec::Constant(3, 1.25));

  // f(w) = w^2 from 1 with lr 0.1; the oracle is a scalar loop of the same recurrences
  cfg.learning_rate = 0.1;
  Vec q = Vec::Ones(1);
  ParamList pq = {view(q)};
  auto sq = AdamState::for_params(nn::as_const(pq));
  double wref = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    Vec gq = 2.0 * q;
    adam_step(pq, {view(std::as_const(gq))}, sq, cfg);
    const double gr = 2.0 * wref;
    m = 0.9 * m + 0.1 * gr;
    v = 0.999 * v + 0.001 * gr * gr;
    wref -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  CHECK(std::abs(q[0]) < 0.1);
  CHECK(q[0] == doctest::Approx(wref).epsilon(1e-12));

  Vec bad = Vec::Constant(1, INFINITY);
  Vec keep = Vec::Constant(1, 0.5);
  ParamList pk = {view(keep)};
  auto sk = AdamState::for_params(nn::as_const(pk));
  CHECK_THROWS_AS(adam_step(pk, {view(std::as_const(bad))}, sk, cfg), NumericError);
  CHECK(keep[0] == 0.5);
}

TEST_CASE("tbptt chunking") {
  auto c = tbptt_chunks(1000, 512);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == std::pair<std::size_t, std::size_t>(0, 512));
  CHECK(c[1] == std::pair<std::size_t, std::size_t>(512, 1000));
  CHECK(tbptt_chunks(100, 100).size() == 1);
  CHECK(tbptt_chunks(100, std::nullopt).size() == 1);
}

TEST_CASE("tbptt: window >= length equals full BPTT") {
  Rng rng(9);
  const auto net = LstmNet::uniform(3, {4, 4}, rng);
  const Mat x = random_mat(3, 12, rng);
  const auto labels = random_labels(12, rng);
  const ClassWeights w{1, 2};
  const auto a = tbptt_gradients(net, x, labels, w, std::nullopt);
  const auto b = tbptt_gradients(net, x, labels, w, 50);
  REQUIRE(a.size() == 1);
  REQUIRE(b.size() == 1);
  CHECK(max_abs_diff(a[0].grad.params(), b[0].grad.params()) == 0.0);

  // and the single chunk gradient is the true full-sequence gradient
  auto loss = [&](const LstmNet& n) {
    auto st = LstmState::zeros(n);
    const Mat s = stacked_lstm_forward(n, x, st, 0.0, Mode::Eval, nullptr);
    return weighted_cross_entropy(s, labels, w, nullptr);
  };
  auto probe = net;
  const double eps = 1e-5;
  auto pp = probe.params();
  const auto g = a[0].grad.params();
  for (std::size_t k = 0; k < pp.size(); ++k) {
    const double orig = pp[k][0];
    pp[k][0] = orig + eps;
    const double up = loss(probe);
    pp[k][0] = orig - eps;
    const double dn = loss(probe);
    pp[k][0] = orig;
    CHECK(relative_error(g[k][0], (up - dn) / (2 * eps)) < 1e-4);
  }
}

TEST_CASE("tbptt: first chunk gradient ignores second chunk labels") {
  Rng rng(10);
  const auto net = LstmNet::uniform(3, {5}, rng);
  const Mat x = random_mat(3, 20, rng);
  auto labels = random_labels(20, rng);
  const auto a = tbptt_gradients(net, x, labels, {1, 1}, 8);
  for (std::size_t i = 8; i < 20; ++i) labels[i] = 1 - labels[i];
  const auto b = tbptt_gradients(net, x, labels, {1, 1}, 8);
  REQUIRE(a.size() == 3);
  CHECK(max_abs_diff(a[0].grad.params(), b[0].grad.params()) == 0.0);
  CHECK(max_abs_diff(a[1].grad.params(), b[1].grad.params()) > 0.0);
}

TEST_CASE("tbptt: state values carry across chunks") {
  Rng rng(11);
  const auto net = LstmNet::uniform(3, {5}, rng);
  const Mat x = random_mat(3, 20, rng);
  const auto labels = random_labels(20, rng);
  const auto chunked = tbptt_gradients(net, x, labels, {1, 1}, 7);
  const auto full = tbptt_gradients(net, x, labels, {1, 1}, std::nullopt);
  // chunk losses average (weighted by length) to the full-sequence loss
  double total = 0.0;
  for (const auto& c : chunked) total += c.loss * static_cast<double>(c.end - c.begin);
  CHECK(total / 20.0 == doctest::Approx(full[0].loss).epsilon(1e-12));
}

TEST_CASE("tbptt_train_sequence takes one Adam step per chunk") {
  Rng rng(12);
  auto net = LstmNet::uniform(3, {4}, rng);
  const Mat x = random_mat(3, 25, rng);
  const auto labels = random_labels(25, rng);
  TrainConfig cfg;
  cfg.tbptt_window = 10;
  AdamState adam = AdamState::for_params(std::as_const(net).params());
  const auto res = tbptt_train_sequence(net, adam, x, labels, cfg, {1, 1}, rng);
  CHECK(res.chunks == 3);
  CHECK(adam.t == 3);
  CHECK(std::isfinite(res.mean_loss));
}

TEST_CASE("gradient checks") {
  ModelCheckSpec spec;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    spec.seed = seed;
    const auto f = gradcheck_fnn(spec);
    const auto l = gradcheck_lstm(spec);
    CHECK(f.max_rel_error < 1e-4);
    CHECK(l.max_rel_error < 1e-4);
    CHECK(f.checked > 0);
    CHECK(l.checked > 0);
    CHECK(gradcheck_loss(seed).max_rel_error < 1e-6);
  }
  // eval mode is deterministic across repeats
  CHECK(gradcheck_lstm(spec).max_rel_error == gradcheck_lstm(spec).max_rel_error);

  // dropout with frozen masks
  spec.dropout = 0.3;
  CHECK(gradcheck_fnn(spec).max_rel_error < 1e-4);
  CHECK(gradcheck_lstm(spec).max_rel_error < 1e-4);
}

TEST_CASE("gradient checks catch injected backward bugs") {
  ModelCheckSpec spec;
  spec.fault = BackwardFault::DropCellCarry;
  CHECK(gradcheck_lstm(spec).max_rel_error > 1e-2);
  spec.fault = BackwardFault::SkipReluMask;
  CHECK(gradcheck_fnn(spec).max_rel_error > 1e-2);
}

TEST_CASE("fnn forward composition and causality-free prediction") {
  Rng rng(13);
  const auto net = FnnNet::uniform(5, {8, 8}, rng);
  const Mat x = random_mat(5, 10, rng);
  const Mat s = fnn_forward(net, x, 0.0, Mode::Eval, nullptr);
  for (Index t = 0; t < 10; ++t) {
    Vec h = x.col(t);
    for (const auto& l : net.hidden) h = dense_forward(h, l, Activation::Relu);
    const Vec o = dense_forward(h, net.out, Activation::Identity);
    CHECK((o - s.col(t)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("train config") {
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.tbptt_window = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.dropout_p = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  const auto ctu = reference_defaults(SchemaStyle::Ctu13, ModelKind::Lstm);
  CHECK(ctu.learning_rate == 0.001);
  CHECK(ctu.epochs == 100);
  CHECK(ctu.tbptt_window == std::optional<std::size_t>(512));
  CHECK(ctu.batch_size == 1);
  const auto cic = reference_defaults(SchemaStyle::Cicids, ModelKind::Lstm);
  CHECK_FALSE(cic.tbptt_window.has_value());
  CHECK(cic.epochs == 30);
  CHECK(reference_defaults(SchemaStyle::Cicids, ModelKind::Fnn).batch_size == 512);
  CHECK(reference_defaults(SchemaStyle::Ctu13, ModelKind::Fnn).batch_size == 1024);

  CHECK(TrainConfig::from_json(ctu.to_json()) == ctu);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json{{"lr", 1}}), ConfigError);

  const auto w = inverse_frequency_weights(90, 10);
  CHECK(w.benign == 1.0);
  CHECK(w.malicious == 9.0);
  CHECK(inverse_frequency_weights(10, 0) == ClassWeights{1, 1});
}
