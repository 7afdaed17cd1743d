#pragma once

#include <cstddef>
#include <vector>

#include "flowseq/nn/dense.hpp"
#include "flowseq/nn/types.hpp"

namespace flowseq::nn {

// Row-block order of the stacked gate matrices.
enum class Gate : int { Input = 0, Forget = 1, Output = 2, Candidate = 3 };

// One LSTM layer. The four gates are stacked row-wise in Gate order, so W is
// 4h x in, U is 4h x h and b has 4h entries.
struct LstmCellParams {
  Mat W;
  Mat U;
  Vec b;

  static LstmCellParams zeros(std::size_t input, std::size_t hidden);
  // W uniform in +-1/sqrt(input), U uniform in +-1/sqrt(hidden), b = 0 except the
  // forget gate bias, which starts at 1.
  static LstmCellParams uniform(std::size_t input, std::size_t hidden, Rng& rng);

  std::size_t hidden() const noexcept { return static_cast<std::size_t>(U.cols()); }
  std::size_t input() const noexcept { return static_cast<std::size_t>(W.cols()); }

  auto W_gate(Gate g) { return W.middleRows(static_cast<Index>(g) * U.cols(), U.cols()); }
  auto U_gate(Gate g) { return U.middleRows(static_cast<Index>(g) * U.cols(), U.cols()); }
  auto b_gate(Gate g) { return b.segment(static_cast<Index>(g) * U.cols(), U.cols()); }
  auto W_gate(Gate g) const { return W.middleRows(static_cast<Index>(g) * U.cols(), U.cols()); }
  auto U_gate(Gate g) const { return U.middleRows(static_cast<Index>(g) * U.cols(), U.cols()); }
  auto b_gate(Gate g) const { return b.segment(static_cast<Index>(g) * U.cols(), U.cols()); }

  void set_zero();
  void append_views(ParamList& list);
  void append_views(ConstParamList& list) const;
};

struct CellOutput {
  Vec h;
  Vec c;
};

// i, f, o = sigmoid(W x + U h_prev + b) per gate; g = tanh(...);
// c = f*c_prev + i*g; h = o*tanh(c).
CellOutput lstm_cell_step(const Vec& x, const Vec& h_prev, const Vec& c_prev, const LstmCellParams& p);

// Stack of LSTM layers (layer i >= 1 reads the hidden sequence of layer i-1) with a
// dense output layer applied at every time step.
struct LstmNet {
  std::vector<LstmCellParams> layers;
  DenseParams out;

  static LstmNet zeros(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t classes = 2);
  static LstmNet uniform(std::size_t input, const std::vector<std::size_t>& hidden, Rng& rng,
                         std::size_t classes = 2);

  std::size_t input_width() const { return layers.front().input(); }
  std::vector<std::size_t> hidden_sizes() const;
  ParamList params();
  ConstParamList params() const;
  void set_zero();
};

struct LstmState {
  std::vector<Vec> h;
  std::vector<Vec> c;

  static LstmState zeros(const LstmNet& net);
};

// Everything the backward pass needs from one forward chunk.
struct LstmCache {
  struct Layer {
    Mat x;       // layer input, one column per step
    Mat h_prev;  // column t holds h_{t-1}
    Mat c_prev;
    Mat gates;   // post-activation i, f, o, g
    Mat c;
    Mat tanh_c;
    Mat mask;    // dropout multipliers on h
    Mat y;       // h * mask, fed upward
  };
  std::vector<Layer> layers;
  Mat scores;
};

// Runs the stack over the columns of x starting from `state`, which is left holding
// the final hidden/cell values. Dropout (train mode only) is applied to every
// layer's output. Returns 2 x T class scores (pre-softmax).
Mat stacked_lstm_forward(const LstmNet& net, const Mat& x, LstmState& state, double dropout_p,
                         Mode mode, Rng* rng, LstmCache* cache = nullptr);

// Accumulates into `grad` the gradient of a loss with dL/dscores = dscores over the
// cached chunk. Nothing flows into the chunk's initial state.
void stacked_lstm_backward(const LstmNet& net, const LstmCache& cache, const Mat& dscores,
                           LstmNet& grad, BackwardFault fault = BackwardFault::None);

}  // namespace flowseq::nn
