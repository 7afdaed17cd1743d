#pragma once

#include <cstddef>

#include "flowseq/features.hpp"
#include "flowseq/metrics.hpp"
#include "flowseq/nn/train_config.hpp"
#include "flowseq/scenario.hpp"
#include "flowseq/synth.hpp"

namespace flowseq {

// Numerics plus protocol and destination port; the generator's source ports are noise.
FeatureSpec synth_feature_spec();

// Small, fast settings sized for generated data.
nn::TrainConfig synth_train_config(nn::ModelKind kind);

struct ExperimentOptions {
  FeatureSpec features = synth_feature_spec();
  SplitOptions split;
  std::size_t warmup_len = 0;
};

struct ExperimentResult {
  double f1_fnn = 0.0;  // fractions in [0, 1]; 0 when undefined
  double f1_lstm = 0.0;
  EvalReport fnn;
  EvalReport lstm;
  std::size_t scenarios = 0;
  std::size_t test_records = 0;
};

// generate -> detect intervals -> extract -> split -> fit encoder on train -> train
// both detectors -> score the test splits.
ExperimentResult separation_experiment(const SynthConfig& config, const nn::TrainConfig& fnn,
                                       const nn::TrainConfig& lstm, const ExperimentOptions& options = {});

}  // namespace flowseq
