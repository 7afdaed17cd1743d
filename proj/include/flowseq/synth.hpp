#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowseq/flow.hpp"
#include "flowseq/scenario.hpp"

namespace flowseq {

// Log-normal parameters (of the underlying normal) for the per-record numerics.
struct FeatureNoise {
  double duration_mu = 0.0;
  double duration_sigma = 1.0;
  double packets_mu = 2.0;
  double packets_sigma = 0.7;
  double bytes_per_packet_mu = 6.0;
  double bytes_per_packet_sigma = 0.5;

  bool operator==(const FeatureNoise&) const = default;
};

// The timeline has one record per second. Malicious records come in bursts of
// burst_len, each preceded by the trigger n-gram on benign records. Bursts are grouped
// into `campaigns` windows separated by benign-only stretches.
struct SynthConfig {
  std::size_t n_records = 20000;
  double malicious_fraction = 0.1;
  std::optional<double> beacon_period;  // whole seconds between burst starts
  std::size_t burst_len = 4;
  std::size_t trigger_ngram = 3;
  std::size_t campaigns = 4;
  double campaign_share = 0.6;  // share of the timeline covered by campaign windows
  FeatureNoise noise;
  double static_shift = 1.0;  // multiplies malicious byte counts (1 = no static signal)
  double start_time = 0.0;
  std::string attack_type = "synbot";
  SchemaStyle style = SchemaStyle::Ctu13;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
  bool operator==(const SynthConfig&) const = default;
};

// Protocol / destination port pairs the generator draws from.
struct SynthToken {
  std::string protocol;
  std::uint16_t dst_port = 0;
  bool operator==(const SynthToken&) const = default;
};
const std::vector<SynthToken>& synth_vocabulary();

struct SynthResult {
  FlowDataset dataset;
  std::vector<Interval> intervals;  // per campaign: first to last malicious timestamp
  double gap_threshold = 0.0;       // separates intra- from inter-campaign gaps
  double padding = 0.0;             // enough to pull each campaign's first trigger in
  std::vector<SynthToken> trigger;
};

// Throws ConfigError when the bursts cannot be placed (too dense for the windows).
SynthResult generate(const SynthConfig& config);

// attack_type,start,end rows plus "# gap_threshold" / "# padding" comments.
void write_intervals(std::ostream& out, const SynthResult& result);
struct GroundTruth {
  std::vector<Interval> intervals;
  std::optional<double> gap_threshold;
  std::optional<double> padding;
};
GroundTruth read_intervals(std::istream& in);

}  // namespace flowseq
