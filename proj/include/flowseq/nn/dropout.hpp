#pragma once

#include "flowseq/nn/types.hpp"

namespace flowseq::nn {

void check_dropout_rate(double p);

// Inverted dropout: in train mode each element is zeroed with probability p and the
// survivors are scaled by 1/(1-p); eval mode is the identity. When `mask` is given it
// receives the multiplier applied to each element.
Mat dropout(const Mat& x, double p, Rng& rng, Mode mode, Mat* mask = nullptr);
Vec dropout(const Vec& x, double p, Rng& rng, Mode mode);

}  // namespace flowseq::nn
