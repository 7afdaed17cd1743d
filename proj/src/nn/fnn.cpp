#include "flowseq/nn/fnn.hpp"

#include "flowseq/error.hpp"
#include "flowseq/nn/dropout.hpp"

namespace flowseq::nn {

FnnNet FnnNet::zeros(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t classes) {
  FnnNet net;
  std::size_t in = input;
  for (auto h : hidden) {
    net.hidden.push_back(DenseParams::zeros(h, in));
    in = h;
  }
  net.out = DenseParams::zeros(classes, in);
  return net;
}

FnnNet FnnNet::uniform(std::size_t input, const std::vector<std::size_t>& hidden, Rng& rng,
                       std::size_t classes) {
  FnnNet net;
  std::size_t in = input;
  for (auto h : hidden) {
    net.hidden.push_back(DenseParams::uniform(h, in, rng));
    in = h;
  }
  net.out = DenseParams::uniform(classes, in, rng);
  return net;
}

std::vector<std::size_t> FnnNet::hidden_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& l : hidden) out.push_back(l.out());
  return out;
}

ParamList FnnNet::params() {
  ParamList list;
  for (auto& l : hidden) l.append_views(list);
  out.append_views(list);
  return list;
}

ConstParamList FnnNet::params() const {
  ConstParamList list;
  for (const auto& l : hidden) l.append_views(list);
  out.append_views(list);
  return list;
}

void FnnNet::set_zero() {
  for (auto& l : hidden) l.set_zero();
  out.set_zero();
}

Mat fnn_forward(const FnnNet& net, const Mat& x, double dropout_p, Mode mode, Rng* rng, FnnCache* cache) {
  check_dropout_rate(dropout_p);
  if (static_cast<std::size_t>(x.rows()) != net.input_width())
    throw ConfigError("fnn input width " + std::to_string(x.rows()) + " does not match model width " +
                      std::to_string(net.input_width()));
  const bool drop = mode == Mode::Train && dropout_p > 0.0;
  if (drop && !rng) throw ConfigError("train-mode dropout needs a random generator");
  if (cache) {
    cache->inputs.clear();
    cache->acts.clear();
    cache->masks.clear();
  }
  Mat a = x;
  for (const auto& layer : net.hidden) {
    Mat z = dense_forward(a, layer, Activation::Relu);
    Mat mask;
    Mat y;
    if (drop) {
      y = dropout(z, dropout_p, *rng, mode, &mask);
    } else {
      mask = Mat::Ones(z.rows(), z.cols());
      y = z;
    }
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->acts.push_back(std::move(z));
      cache->masks.push_back(std::move(mask));
    }
    a = std::move(y);
  }
  Mat scores = dense_forward(a, net.out, Activation::Identity);
  if (cache) {
    cache->top = std::move(a);
    cache->scores = scores;
  }
  return scores;
}

void fnn_backward(const FnnNet& net, const FnnCache& cache, const Mat& dscores, FnnNet& grad,
                  BackwardFault fault) {
  if (grad.hidden.size() != net.hidden.size() || cache.acts.size() != net.hidden.size())
    throw ConfigError("fnn gradient/cache depth mismatch");
  Mat d = dense_backward(cache.top, cache.scores, dscores, net.out, Activation::Identity, grad.out);
  for (std::size_t l = net.hidden.size(); l-- > 0;) {
    d = d.cwiseProduct(cache.masks[l]);
    d = dense_backward(cache.inputs[l], cache.acts[l], d, net.hidden[l], Activation::Relu, grad.hidden[l],
                       fault);
  }
}

}  // namespace flowseq::nn
