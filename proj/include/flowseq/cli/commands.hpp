#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flowseq/cli/config.hpp"
#include "flowseq/detectors.hpp"
#include "flowseq/metrics.hpp"
#include "flowseq/nn/types.hpp"
#include "flowseq/scenario.hpp"
#include "flowseq/synth.hpp"

namespace flowseq::cli {

// Output layout under RunConfig::output_dir.
struct Paths {
  std::string root;

  std::string manifest() const;
  std::string encoder() const;
  std::string rejections() const;
  std::string scenario_file(const std::string& scenario, bool train) const;
  std::string checkpoint(nn::ModelKind kind) const;
  std::string loss_log(nn::ModelKind kind) const;
  std::string predictions(const std::string& model) const;
  std::string report_csv(const std::string& model) const;
  std::string report_table(const std::string& model) const;
  std::string stamp(const std::string& command) const;
};

// File-system safe form of a scenario name.
std::string file_stem(const std::string& scenario);

void write_stamp(const std::string& path, const std::string& command, const std::string& config_hash,
                 std::uint64_t seed, const nlohmann::json& extra = nlohmann::json::object());

Manifest cmd_extract(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, nn::ModelKind kind, std::ostream& log);
EvalReport cmd_eval(const RunConfig& config, nn::ModelKind kind, const std::optional<std::string>& checkpoint,
                    std::ostream& log);
DeltaReport cmd_ensemble(const RunConfig& config, std::ostream& log);
SynthResult cmd_synth(const SynthConfig& config, const std::string& output_dir, std::ostream& log);

struct GradcheckSummary {
  bool passed = true;
  double worst = 0.0;
};
GradcheckSummary cmd_gradcheck(std::size_t seeds, nn::BackwardFault fault, double tolerance, std::ostream& log);

// Groups prediction rows by scenario (first-appearance order) into a report.
EvalReport report_from_predictions(const std::vector<PredictionRow>& rows);

// Entry point of the flowseq binary. Returns the process exit code:
// 0 ok, 1 config error, 2 data error, 3 numeric failure.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace flowseq::cli
