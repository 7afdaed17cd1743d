#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flowseq/features.hpp"
#include "flowseq/flow.hpp"
#include "flowseq/nn/fnn.hpp"
#include "flowseq/nn/lstm.hpp"
#include "flowseq/nn/train_config.hpp"

namespace flowseq {

// A scenario (or split) after encoding: one column per record, labels 0/1.
struct EncodedSequence {
  std::string name;
  nn::Mat x;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

EncodedSequence encode_sequence(const Encoder& encoder, std::string name, std::span<const FlowRecord> records);

struct Prediction {
  int cls = 0;  // 1 = malicious
  double p_benign = 0.5;
  double p_malicious = 0.5;

  bool malicious() const noexcept { return cls == 1; }
  bool operator==(const Prediction&) const = default;
};

// Softmax of the scores; malicious only when its probability is strictly larger.
Prediction prediction_from_scores(double s_benign, double s_malicious);

struct FnnModel {
  nn::FnnNet net;
  nn::TrainConfig config;
  std::uint64_t encoder_hash = 0;
};

struct LstmModel {
  nn::LstmNet net;
  nn::TrainConfig config;
  std::uint64_t encoder_hash = 0;
};

struct LossRecord {
  std::size_t epoch = 0;  // 1-based
  std::string scenario;   // "*" for pooled FNN epochs
  double mean_loss = 0.0;
};
using TrainLog = std::vector<LossRecord>;

void write_loss_log(std::ostream& out, const TrainLog& log);

// Configured weights, or inverse class frequency over `train`.
nn::ClassWeights resolve_class_weights(const nn::TrainConfig& config, std::span<const EncodedSequence> train);

// Pools and shuffles every training record into mini-batches of config.batch_size.
FnnModel train_fnn(std::span<const EncodedSequence> train, const nn::TrainConfig& config,
                   std::uint64_t encoder_hash = 0, TrainLog* log = nullptr);

// Visits scenarios in a shuffled order each epoch; each one is a single sequence
// trained with truncated BPTT from a zero state.
LstmModel train_lstm(std::span<const EncodedSequence> train, const nn::TrainConfig& config,
                     std::uint64_t encoder_hash = 0, TrainLog* log = nullptr);

std::vector<Prediction> predict_fnn(const FnnModel& model, const nn::Mat& x);

// Zero state, optionally advanced through `warmup` (no predictions emitted), then one
// prediction per column of `x`.
std::vector<Prediction> predict_lstm(const LstmModel& model, const nn::Mat& x, const nn::Mat* warmup = nullptr);

// Malicious when either member says so. p_malicious is the larger of the two.
std::vector<Prediction> ensemble_or(std::span<const Prediction> a, std::span<const Prediction> b);

// One line per test record.
struct PredictionRow {
  std::string scenario;
  std::size_t index = 0;
  double timestamp = 0.0;
  int truth = 0;
  int predicted = 0;
  double p_malicious = 0.0;

  bool operator==(const PredictionRow&) const = default;
};

void write_predictions(std::ostream& out, std::span<const PredictionRow> rows);
std::vector<PredictionRow> read_predictions(std::istream& in);
void write_predictions_file(const std::string& path, std::span<const PredictionRow> rows);
std::vector<PredictionRow> read_predictions_file(const std::string& path);

}  // namespace flowseq
