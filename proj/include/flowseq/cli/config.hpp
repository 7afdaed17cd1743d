#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowseq/features.hpp"
#include "flowseq/flow.hpp"
#include "flowseq/nn/train_config.hpp"
#include "flowseq/scenario.hpp"

namespace flowseq::cli {

enum class DatasetRole { Attack, Benign };

struct DatasetRef {
  std::string path;  // resolved against the config file's directory
  DatasetRole role = DatasetRole::Attack;
};

struct ExtractionParams {
  std::optional<double> gap_threshold;
  double padding = 0.0;
  std::size_t benign_scenarios = 0;
  std::size_t benign_target_len = 0;
  SplitOptions split;
};

struct RunConfig {
  SchemaStyle style = SchemaStyle::Ctu13;
  std::vector<DatasetRef> datasets;
  FlowSchema schema;
  HostSet excluded_hosts;
  std::vector<Interval> intervals;        // documented
  bool auto_detect_all = false;
  std::vector<std::string> auto_detect;   // attack types, when not all
  ExtractionParams extraction;
  FeatureSpec features;
  nn::TrainConfig fnn;
  nn::TrainConfig lstm;
  std::size_t warmup_len = 0;
  std::string output_dir;
  std::uint64_t seed = 0;
  nlohmann::json source;  // as read, with the effective seed and output_dir filled in

  // Model settings start from the published defaults for `style`; explicit keys win.
  // The run seed feeds both models unless a model block sets its own.
  static RunConfig from_json(const nlohmann::json& j, const std::string& base_dir,
                             std::optional<std::uint64_t> seed_override = std::nullopt,
                             std::optional<std::string> output_override = std::nullopt);
  static RunConfig load(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt,
                        std::optional<std::string> output_override = std::nullopt);

  bool auto_detects(const std::string& attack_type) const;
  const nn::TrainConfig& train_config(nn::ModelKind kind) const { return kind == nn::ModelKind::Fnn ? fnn : lstm; }
  std::string hash() const;
};

}  // namespace flowseq::cli
