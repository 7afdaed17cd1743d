#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowseq {

// Malicious is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;

  std::uint64_t total() const noexcept { return tp + fn + tn + fp; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;
  bool operator==(const ConfusionMatrix&) const = default;
};

// Labels and predictions are 0 (benign) or 1 (malicious).
ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth);

// 100 * 2tp / (2tp + fp + fn); nullopt when the denominator is 0.
std::optional<double> f1(const ConfusionMatrix& cm);

// Three decimals, or "n/a".
std::string format_f1(std::optional<double> v);

struct ReportRow {
  std::string name;
  ConfusionMatrix cm;

  std::optional<double> f1() const { return flowseq::f1(cm); }
};

struct EvalReport {
  std::vector<ReportRow> rows;
  ReportRow summary;
};

// Rows in input order; summary = summed counts and the F1 of those sums.
EvalReport scenario_report(std::vector<ReportRow> rows);

struct DeltaRow {
  std::string name;
  ConfusionMatrix ensemble;
  std::int64_t delta_fn = 0;
  std::int64_t delta_fp = 0;

  std::optional<double> f1() const { return flowseq::f1(ensemble); }
};

struct DeltaReport {
  std::vector<DeltaRow> rows;
  DeltaRow summary;
};

// Ensemble minus baseline; negative means the ensemble is better. Scenario names
// must match row for row.
DeltaReport delta_report(const EvalReport& ensemble, const EvalReport& baseline);

void write_report_csv(std::ostream& out, const EvalReport& report);
void write_report_table(std::ostream& out, const EvalReport& report, const std::string& title = "");
void write_delta_csv(std::ostream& out, const DeltaReport& report);
void write_delta_table(std::ostream& out, const DeltaReport& report, const std::string& title = "");

// Reads scenario,tp,fn,tn,fp rows (header required, "summary" rows ignored).
std::vector<ReportRow> read_confusion_csv(std::istream& in);

}  // namespace flowseq
