#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowseq/flow.hpp"
#include "flowseq/nn/adam.hpp"
#include "flowseq/nn/loss.hpp"

namespace flowseq::nn {

enum class ModelKind { Fnn, Lstm };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 1;
  double dropout_p = 0.0;
  std::size_t batch_size = 1;
  std::optional<std::size_t> tbptt_window;
  // Absent means inverse class frequency over the training data, w_benign = 1.
  std::optional<ClassWeights> class_weights;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {256, 256};

  void validate() const;
  AdamConfig adam() const;

  nlohmann::json to_json() const;
  // Keys present in `j` override `base`.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig from_json(const nlohmann::json& j);
  bool operator==(const TrainConfig&) const = default;
};

// Hyperparameters published for each dataset/model pair.
TrainConfig reference_defaults(SchemaStyle style, ModelKind kind);

// w_benign = 1, w_malicious = n_benign / n_malicious; both 1 when either count is 0.
ClassWeights inverse_frequency_weights(std::size_t n_benign, std::size_t n_malicious);

}  // namespace flowseq::nn
