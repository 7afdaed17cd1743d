#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowseq/flow.hpp"

namespace flowseq {

inline constexpr std::string_view kBenignType = "benign";

// Closed time interval [start, end] tagged with the attack type it isolates.
struct Interval {
  double start = 0.0;
  double end = 0.0;
  std::string attack_type;

  bool contains(double t) const noexcept { return start <= t && t <= end; }
  bool operator==(const Interval&) const = default;
};

struct Scenario {
  std::string name;
  std::string attack_type;  // kBenignType for benign-only scenarios
  std::vector<FlowRecord> records;
  Interval interval;

  bool is_benign() const noexcept { return attack_type == kBenignType; }
  std::size_t malicious_count() const;
  std::size_t benign_count() const { return records.size() - malicious_count(); }
};

struct ScenarioSplit {
  std::vector<FlowRecord> train;  // temporal prefix
  std::vector<FlowRecord> test;
  double train_fraction_used = 0.0;
  std::optional<std::string> warning;
};

struct IntervalOptions {
  // Consecutive malicious flows further apart than this start a new interval.
  // Defaults to 10x the median inter-malicious gap.
  std::optional<double> gap_threshold;
  double padding = 0.0;
};

double default_gap_threshold(std::span<const double> sorted_timestamps);

// Groups the timestamps of `attack_type`'s malicious flows into disjoint sorted
// intervals. Throws DataError when the type is absent.
std::vector<Interval> detect_intervals(const FlowDataset& dataset, std::string_view attack_type,
                                       const IntervalOptions& options = {});

// Attack types present in the dataset, in order of first appearance.
std::vector<std::string> attack_types(const FlowDataset& dataset);

struct BeaconAnalysis {
  std::vector<double> autocorrelation;  // lags 1..n
  std::size_t peak_lag = 0;             // 0 when there is no usable lag
  double peak_value = 0.0;
  double threshold = 0.0;
  bool significant = false;
};

inline constexpr double kBeaconMinPeak = 0.3;

// Full autocorrelation analysis behind beacon_period().
BeaconAnalysis analyze_beacon(std::span<const double> sorted_timestamps, double bin_width,
                              std::size_t max_lag);

// Period of a beaconing event train, or nullopt when no lag stands out.
// Event counts are binned on the grid k*bin_width; the autocorrelation peak over
// lags 1..max_lag is reported when it reaches both mean + 3 sd of the
// non-harmonic lags and kBeaconMinPeak.
std::optional<double> beacon_period(std::span<const double> sorted_timestamps, double bin_width,
                                    std::size_t max_lag);

struct ExtractionResult {
  std::vector<Scenario> scenarios;
  std::size_t discarded = 0;
  std::vector<std::string> warnings;
};

// One scenario per interval with every record inside it. Malicious records of a
// different attack type are dropped and counted as discarded. Throws ConfigError on
// unsorted or overlapping intervals.
ExtractionResult extract_scenarios(const FlowDataset& dataset, std::span<const Interval> intervals);

struct BenignScenarios {
  std::vector<Scenario> scenarios;
  std::vector<std::string> warnings;
};

// Cuts `count` contiguous benign scenarios of target_len records from the start of
// the dataset; target_len == 0 spreads the whole dataset. Remainders go to earlier
// scenarios.
BenignScenarios make_benign_scenarios(const FlowDataset& dataset, std::size_t count,
                                      std::size_t target_len = 0, std::string_view name_prefix = "benign");

struct SplitOptions {
  double train_fraction = 0.7;
  double min_malicious_train_fraction = 0.7;
};

ScenarioSplit split_scenario(const Scenario& scenario, const SplitOptions& options = {});

// Number of records in the train prefix; the core of split_scenario.
std::size_t split_point(std::span<const FlowRecord> records, const SplitOptions& options,
                        std::optional<std::string>* warning = nullptr);

struct ManifestRow {
  std::string name;
  std::string attack_type;
  double start = 0.0;
  double end = 0.0;
  std::size_t benign = 0;
  std::size_t malicious = 0;
  std::size_t train_benign = 0;
  std::size_t train_malicious = 0;
  std::size_t test_benign = 0;
  std::size_t test_malicious = 0;
  std::string note;

  std::size_t records() const { return benign + malicious; }
  std::size_t train() const { return train_benign + train_malicious; }
  std::size_t test() const { return test_benign + test_malicious; }
};

ManifestRow manifest_row(const Scenario& scenario, const ScenarioSplit& split);

struct Manifest {
  std::vector<ManifestRow> rows;
  std::size_t discarded = 0;
  std::vector<std::string> notes;  // "# key: value" header lines
};

// Tab-separated, one row per scenario, "#" lines carry discard counts and the
// extraction parameters in force.
void write_manifest(std::ostream& out, const Manifest& manifest);
Manifest read_manifest(std::istream& in);

}  // namespace flowseq
