#include "flowseq/nn/lstm.hpp"

#include <cmath>
#include <string>

#include "flowseq/error.hpp"
#include "flowseq/nn/dropout.hpp"

namespace flowseq::nn {

LstmCellParams LstmCellParams::zeros(std::size_t input, std::size_t hidden) {
  const auto h = static_cast<Index>(hidden);
  return {Mat::Zero(4 * h, static_cast<Index>(input)), Mat::Zero(4 * h, h), Vec::Zero(4 * h)};
}

LstmCellParams LstmCellParams::uniform(std::size_t input, std::size_t hidden, Rng& rng) {
  auto p = zeros(input, hidden);
  std::uniform_real_distribution<double> uw(-1.0 / std::sqrt(static_cast<double>(input)),
                                            1.0 / std::sqrt(static_cast<double>(input)));
  std::uniform_real_distribution<double> uu(-1.0 / std::sqrt(static_cast<double>(hidden)),
                                            1.0 / std::sqrt(static_cast<double>(hidden)));
  for (Index j = 0; j < p.W.cols(); ++j)
    for (Index i = 0; i < p.W.rows(); ++i) p.W(i, j) = uw(rng);
  for (Index j = 0; j < p.U.cols(); ++j)
    for (Index i = 0; i < p.U.rows(); ++i) p.U(i, j) = uu(rng);
  p.b_gate(Gate::Forget).setOnes();
  return p;
}

void LstmCellParams::set_zero() {
  W.setZero();
  U.setZero();
  b.setZero();
}

void LstmCellParams::append_views(ParamList& list) {
  list.push_back(view(W));
  list.push_back(view(U));
  list.push_back(view(b));
}

void LstmCellParams::append_views(ConstParamList& list) const {
  list.push_back(view(W));
  list.push_back(view(U));
  list.push_back(view(b));
}

namespace {

// Pre-activations (4h) to gate activations in place.
void activate_gates(Eigen::Ref<Vec> a, Index h) {
  for (Index k = 0; k < 3 * h; ++k) a[k] = sigmoid(a[k]);
  for (Index k = 3 * h; k < 4 * h; ++k) a[k] = std::tanh(a[k]);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("lstm shape mismatch: " + what);
}

}  // namespace

CellOutput lstm_cell_step(const Vec& x, const Vec& h_prev, const Vec& c_prev, const LstmCellParams& p) {
  const Index h = p.U.cols();
  require(x.size() == p.W.cols(), "input width");
  require(h_prev.size() == h && c_prev.size() == h, "state width");
  Vec a = p.W * x + p.U * h_prev + p.b;
  activate_gates(a, h);
  const auto i = a.segment(0, h).array();
  const auto f = a.segment(h, h).array();
  const auto o = a.segment(2 * h, h).array();
  const auto g = a.segment(3 * h, h).array();
  CellOutput out;
  out.c = (f * c_prev.array() + i * g).matrix();
  out.h = (o * out.c.array().tanh()).matrix();
  return out;
}

LstmNet LstmNet::zeros(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t classes) {
  if (hidden.empty()) throw ConfigError("an LSTM stack needs at least one layer");
  LstmNet net;
  std::size_t in = input;
  for (auto h : hidden) {
    net.layers.push_back(LstmCellParams::zeros(in, h));
    in = h;
  }
  net.out = DenseParams::zeros(classes, in);
  return net;
}

LstmNet LstmNet::uniform(std::size_t input, const std::vector<std::size_t>& hidden, Rng& rng,
                         std::size_t classes) {
  if (hidden.empty()) throw ConfigError("an LSTM stack needs at least one layer");
  LstmNet net;
  std::size_t in = input;
  for (auto h : hidden) {
    net.layers.push_back(LstmCellParams::uniform(in, h, rng));
    in = h;
  }
  net.out = DenseParams::uniform(classes, in, rng);
  return net;
}

std::vector<std::size_t> LstmNet::hidden_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& l : layers) out.push_back(l.hidden());
  return out;
}

ParamList LstmNet::params() {
  ParamList list;
  for (auto& l : layers) l.append_views(list);
  out.append_views(list);
  return list;
}

ConstParamList LstmNet::params() const {
  ConstParamList list;
  for (const auto& l : layers) l.append_views(list);
  out.append_views(list);
  return list;
}

void LstmNet::set_zero() {
  for (auto& l : layers) l.set_zero();
  out.set_zero();
}

LstmState LstmState::zeros(const LstmNet& net) {
  LstmState s;
  for (const auto& l : net.layers) {
    s.h.push_back(Vec::Zero(static_cast<Index>(l.hidden())));
    s.c.push_back(Vec::Zero(static_cast<Index>(l.hidden())));
  }
  return s;
}

Mat stacked_lstm_forward(const LstmNet& net, const Mat& x, LstmState& state, double dropout_p,
                         Mode mode, Rng* rng, LstmCache* cache) {
  check_dropout_rate(dropout_p);
  require(!net.layers.empty(), "no layers");
  require(x.rows() == net.layers.front().W.cols(), "input width " + std::to_string(x.rows()) +
                                                       " vs " + std::to_string(net.layers.front().W.cols()));
  require(state.h.size() == net.layers.size() && state.c.size() == net.layers.size(), "state depth");
  if (mode == Mode::Train && dropout_p > 0.0 && !rng)
    throw ConfigError("train-mode dropout needs a random generator");

  const Index T = x.cols();
  if (cache) cache->layers.assign(net.layers.size(), {});
  Mat input = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& p = net.layers[l];
    const Index h = p.U.cols();
    require(state.h[l].size() == h && state.c[l].size() == h, "state width at layer " + std::to_string(l));

    Mat pre = p.W * input;
    pre.colwise() += p.b;
    Mat gates(4 * h, T), c(h, T), tanh_c(h, T), hs(h, T), h_prev(h, T), c_prev(h, T);
    Vec hp = state.h[l];
    Vec cp = state.c[l];
    for (Index t = 0; t < T; ++t) {
      h_prev.col(t) = hp;
      c_prev.col(t) = cp;
      Vec a = pre.col(t) + p.U * hp;
      activate_gates(a, h);
      gates.col(t) = a;
      cp = a.segment(h, h).cwiseProduct(cp) + a.segment(0, h).cwiseProduct(a.segment(3 * h, h));
      c.col(t) = cp;
      tanh_c.col(t) = cp.array().tanh().matrix();
      hp = a.segment(2 * h, h).cwiseProduct(tanh_c.col(t));
      hs.col(t) = hp;
    }
    state.h[l] = hp;
    state.c[l] = cp;

    Mat mask;
    Mat y;
    if (mode == Mode::Train && dropout_p > 0.0) {
      y = dropout(hs, dropout_p, *rng, mode, &mask);
    } else {
      mask = Mat::Ones(h, T);
      y = hs;
    }
    if (cache) {
      auto& L = cache->layers[l];
      L.x = std::move(input);
      L.h_prev = std::move(h_prev);
      L.c_prev = std::move(c_prev);
      L.gates = std::move(gates);
      L.c = std::move(c);
      L.tanh_c = std::move(tanh_c);
      L.mask = std::move(mask);
      L.y = y;
    }
    input = std::move(y);
  }
  Mat scores = dense_forward(input, net.out, Activation::Identity);
  if (cache) cache->scores = scores;
  return scores;
}

void stacked_lstm_backward(const LstmNet& net, const LstmCache& cache, const Mat& dscores,
                           LstmNet& grad, BackwardFault fault) {
  require(cache.layers.size() == net.layers.size(), "cache depth");
  require(grad.layers.size() == net.layers.size(), "gradient depth");
  const auto& top = cache.layers.back().y;
  Mat dy = dense_backward(top, cache.scores, dscores, net.out, Activation::Identity, grad.out);

  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const auto& p = net.layers[li];
    const auto& L = cache.layers[li];
    auto& g = grad.layers[li];
    const Index h = p.U.cols();
    const Index T = L.x.cols();

    const Mat dh_above = dy.cwiseProduct(L.mask);
    Mat dA(4 * h, T);
    Vec dh_next = Vec::Zero(h);
    Vec dc_next = Vec::Zero(h);
    for (Index t = T - 1; t >= 0; --t) {
      const auto gt = L.gates.col(t);
      const Vec i = gt.segment(0, h), f = gt.segment(h, h), o = gt.segment(2 * h, h),
                gg = gt.segment(3 * h, h);
      const Vec tc = L.tanh_c.col(t);
      const Vec dh = dh_above.col(t) + dh_next;
      const Vec d_o = dh.cwiseProduct(tc);
      const Vec dc = (dh.array() * o.array() * (1.0 - tc.array().square())).matrix() + dc_next;
      const Vec di = dc.cwiseProduct(gg);
      const Vec dg = dc.cwiseProduct(i);
      const Vec df = dc.cwiseProduct(L.c_prev.col(t));
      auto a = dA.col(t);
      a.segment(0, h) = (di.array() * i.array() * (1.0 - i.array())).matrix();
      a.segment(h, h) = (df.array() * f.array() * (1.0 - f.array())).matrix();
      a.segment(2 * h, h) = (d_o.array() * o.array() * (1.0 - o.array())).matrix();
      a.segment(3 * h, h) = (dg.array() * (1.0 - gg.array().square())).matrix();
      dh_next.noalias() = p.U.transpose() * dA.col(t);
      if (fault == BackwardFault::DropCellCarry)
        dc_next.setZero();
      else
        dc_next = dc.cwiseProduct(f);
    }
    g.W.noalias() += dA * L.x.transpose();
    g.U.noalias() += dA * L.h_prev.transpose();
    g.b += dA.rowwise().sum();
    if (li > 0) dy = p.W.transpose() * dA;
  }
}

}  // namespace flowseq::nn
