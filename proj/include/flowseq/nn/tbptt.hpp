#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "flowseq/nn/adam.hpp"
#include "flowseq/nn/loss.hpp"
#include "flowseq/nn/lstm.hpp"
#include "flowseq/nn/train_config.hpp"

namespace flowseq::nn {

// [begin, end) step ranges of consecutive chunks of at most `window` steps. No
// window means one chunk covering the whole sequence.
std::vector<std::pair<std::size_t, std::size_t>> tbptt_chunks(std::size_t length,
                                                              std::optional<std::size_t> window);

struct ChunkGradient {
  std::size_t begin = 0;
  std::size_t end = 0;
  double loss = 0.0;  // mean over the chunk's steps
  LstmNet grad;
};

// Gradients of each chunk's mean loss with the parameters held fixed. State values
// flow from chunk to chunk; gradients stop at the boundaries.
std::vector<ChunkGradient> tbptt_gradients(const LstmNet& net, const Mat& x, std::span<const int> labels,
                                           const ClassWeights& weights, std::optional<std::size_t> window,
                                           double dropout_p = 0.0, Mode mode = Mode::Eval,
                                           Rng* rng = nullptr);

struct SequenceLoss {
  double mean_loss = 0.0;  // step-weighted over the whole sequence
  std::size_t chunks = 0;
};

// One pass over a sequence with zero initial state: forward a chunk, backprop it,
// take one Adam step, carry the state values into the next chunk.
SequenceLoss tbptt_train_sequence(LstmNet& net, AdamState& adam, const Mat& x, std::span<const int> labels,
                                  const TrainConfig& config, const ClassWeights& weights, Rng& rng);

}  // namespace flowseq::nn
