#include "flowseq/nn/tbptt.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "flowseq/error.hpp"

namespace flowseq::nn {

std::vector<std::pair<std::size_t, std::size_t>> tbptt_chunks(std::size_t length,
                                                              std::optional<std::size_t> window) {
  if (window && *window == 0) throw ConfigError("tbptt_window must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t w = window ? *window : length;
  for (std::size_t b = 0; b < length; b += w) out.emplace_back(b, std::min(length, b + w));
  return out;
}

namespace {

void check_sequence(const Mat& x, std::span<const int> labels) {
  if (x.cols() == 0) throw DataError("cannot train on an empty sequence");
  if (static_cast<std::size_t>(x.cols()) != labels.size())
    throw ConfigError("sequence has " + std::to_string(x.cols()) + " steps but " +
                      std::to_string(labels.size()) + " labels");
}

}  // namespace

std::vector<ChunkGradient> tbptt_gradients(const LstmNet& net, const Mat& x, std::span<const int> labels,
                                           const ClassWeights& weights, std::optional<std::size_t> window,
                                           double dropout_p, Mode mode, Rng* rng) {
  check_sequence(x, labels);
  std::vector<ChunkGradient> out;
  auto state = LstmState::zeros(net);
  for (auto [b, e] : tbptt_chunks(static_cast<std::size_t>(x.cols()), window)) {
    const auto n = static_cast<Index>(e - b);
    LstmCache cache;
    Mat scores = stacked_lstm_forward(net, x.middleCols(static_cast<Index>(b), n), state, dropout_p, mode,
                                      rng, &cache);
    Mat dscores;
    ChunkGradient cg;
    cg.begin = b;
    cg.end = e;
    cg.loss = weighted_cross_entropy(scores, labels.subspan(b, e - b), weights, &dscores);
    cg.grad = LstmNet::zeros(net.input_width(), net.hidden_sizes(), net.out.out());
    stacked_lstm_backward(net, cache, dscores, cg.grad);
    out.push_back(std::move(cg));
  }
  return out;
}

SequenceLoss tbptt_train_sequence(LstmNet& net, AdamState& adam, const Mat& x, std::span<const int> labels,
                                  const TrainConfig& config, const ClassWeights& weights, Rng& rng) {
  check_sequence(x, labels);
  SequenceLoss result;
  auto state = LstmState::zeros(net);
  auto grad = LstmNet::zeros(net.input_width(), net.hidden_sizes(), net.out.out());
  const auto adam_cfg = config.adam();
  double total = 0.0;
  for (auto [b, e] : tbptt_chunks(static_cast<std::size_t>(x.cols()), config.tbptt_window)) {
    const auto n = static_cast<Index>(e - b);
    LstmCache cache;
    Mat scores = stacked_lstm_forward(net, x.middleCols(static_cast<Index>(b), n), state, config.dropout_p,
                                      Mode::Train, &rng, &cache);
    Mat dscores;
    const double loss = weighted_cross_entropy(scores, labels.subspan(b, e - b), weights, &dscores);
    if (!std::isfinite(loss))
      throw NumericError("non-finite loss in chunk [" + std::to_string(b) + ", " + std::to_string(e) + ")");
    grad.set_zero();
    stacked_lstm_backward(net, cache, dscores, grad);
    adam_step(net.params(), std::as_const(grad).params(), adam, adam_cfg);
    total += loss * static_cast<double>(n);
    ++result.chunks;
  }
  result.mean_loss = total / static_cast<double>(x.cols());
  return result;
}

}  // namespace flowseq::nn
