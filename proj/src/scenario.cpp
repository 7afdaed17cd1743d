#include "flowseq/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "flowseq/error.hpp"

namespace flowseq {

std::size_t Scenario::malicious_count() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const FlowRecord& r) { return r.label.is_malicious(); }));
}

double default_gap_threshold(std::span<const double> ts) {
  if (ts.size() < 2) return 0.0;
  std::vector<double> gaps(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) gaps[i - 1] = ts[i] - ts[i - 1];
  std::sort(gaps.begin(), gaps.end());
  const std::size_t n = gaps.size();
  const double median = n % 2 ? gaps[n / 2] : 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
  return 10.0 * median;
}

std::vector<std::string> attack_types(const FlowDataset& dataset) {
  std::vector<std::string> types;
  for (const auto& r : dataset.records) {
    if (!r.label.is_malicious()) continue;
    if (std::find(types.begin(), types.end(), r.label.attack_type()) == types.end())
      types.push_back(r.label.attack_type());
  }
  return types;
}

std::vector<Interval> detect_intervals(const FlowDataset& dataset, std::string_view attack_type,
                                       const IntervalOptions& options) {
  std::vector<double> ts;
  for (const auto& r : dataset.records)
    if (r.label.is_malicious() && r.label.attack_type() == attack_type) ts.push_back(r.timestamp);
  if (ts.empty())
    throw DataError("no malicious records for type '" + std::string(attack_type) + "'");
  if (options.padding < 0.0) throw ConfigError("interval padding must be >= 0");

  const double gap = options.gap_threshold.value_or(default_gap_threshold(ts));
  std::vector<Interval> raw;
  Interval cur{ts.front(), ts.front(), std::string(attack_type)};
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i] - ts[i - 1] > gap) {
      raw.push_back(cur);
      cur.start = ts[i];
    }
    cur.end = ts[i];
  }
  raw.push_back(cur);

  const double lo = dataset.records.front().timestamp;
  const double hi = dataset.records.back().timestamp;
  std::vector<Interval> out;
  for (auto iv : raw) {
    iv.start = std::max(lo, iv.start - options.padding);
    iv.end = std::min(hi, iv.end + options.padding);
    // Padding can make neighbours touch; closed intervals that share a point merge.
    if (!out.empty() && iv.start <= out.back().end)
      out.back().end = std::max(out.back().end, iv.end);
    else
      out.push_back(std::move(iv));
  }
  return out;
}

BeaconAnalysis analyze_beacon(std::span<const double> ts, double bin_width, std::size_t max_lag) {
  if (!(bin_width > 0.0)) throw ConfigError("beacon bin width must be > 0");
  BeaconAnalysis a;
  if (ts.size() < 4) return a;

  const double base = std::floor(ts.front() / bin_width);
  const double span_bins = std::floor(ts.back() / bin_width) - base;
  if (span_bins > 1e8) throw DataError("beacon analysis would need more than 1e8 bins");
  const auto nbins = static_cast<std::size_t>(span_bins) + 1;
  std::vector<double> x(nbins, 0.0);
  for (double t : ts) {
    const auto idx = static_cast<std::size_t>(std::floor(t / bin_width) - base);
    x[std::min(idx, nbins - 1)] += 1.0;
  }
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(nbins);
  double den = 0.0;
  for (double& v : x) {
    v -= mean;
    den += v * v;
  }
  const std::size_t lags = std::min(max_lag, nbins - 1);
  if (den <= 0.0 || lags == 0) return a;

  a.autocorrelation.resize(lags);
  for (std::size_t k = 1; k <= lags; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < nbins; ++i) s += x[i] * x[i + k];
    a.autocorrelation[k - 1] = s / den;
  }
  const auto peak = std::max_element(a.autocorrelation.begin(), a.autocorrelation.end());
  a.peak_lag = static_cast<std::size_t>(peak - a.autocorrelation.begin()) + 1;
  a.peak_value = *peak;

  // Harmonics of the peak are part of the same periodic signal, not background.
  std::vector<double> background;
  for (std::size_t k = 1; k <= lags; ++k)
    if (k % a.peak_lag != 0) background.push_back(a.autocorrelation[k - 1]);
  if (background.size() < 2) return a;
  const double bmean =
      std::accumulate(background.begin(), background.end(), 0.0) / static_cast<double>(background.size());
  double var = 0.0;
  for (double v : background) var += (v - bmean) * (v - bmean);
  var /= static_cast<double>(background.size());
  a.threshold = bmean + 3.0 * std::sqrt(var);
  a.significant = a.peak_value >= a.threshold && a.peak_value >= kBeaconMinPeak;
  return a;
}

std::optional<double> beacon_period(std::span<const double> ts, double bin_width,
                                    std::size_t max_lag) {
  const auto a = analyze_beacon(ts, bin_width, max_lag);
  if (!a.significant) return std::nullopt;
  return static_cast<double>(a.peak_lag) * bin_width;
}

ExtractionResult extract_scenarios(const FlowDataset& dataset, std::span<const Interval> intervals) {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].start > intervals[i].end)
      throw ConfigError("interval with start > end for '" + intervals[i].attack_type + "'");
    if (i && intervals[i].start <= intervals[i - 1].end)
      throw ConfigError("intervals overlap or are unsorted ('" + intervals[i - 1].attack_type +
                        "' and '" + intervals[i].attack_type + "'); merge them first");
  }

  ExtractionResult res;
  std::vector<std::size_t> per_type_total(intervals.size(), 0);
  for (std::size_t i = 0; i < intervals.size(); ++i)
    for (std::size_t j = 0; j < intervals.size(); ++j)
      per_type_total[i] += intervals[j].attack_type == intervals[i].attack_type;

  std::vector<std::size_t> per_type_seen;
  std::vector<std::string> seen_types;
  for (const auto& iv : intervals) {
    Scenario s;
    s.attack_type = iv.attack_type;
    s.interval = iv;
    auto it = std::find(seen_types.begin(), seen_types.end(), iv.attack_type);
    std::size_t ordinal = 1;
    if (it == seen_types.end()) {
      seen_types.push_back(iv.attack_type);
      per_type_seen.push_back(1);
    } else {
      ordinal = ++per_type_seen[static_cast<std::size_t>(it - seen_types.begin())];
    }
    const std::size_t total = per_type_total[res.scenarios.size()];
    s.name = total > 1 ? iv.attack_type + "-" + std::to_string(ordinal) : iv.attack_type;
    res.scenarios.push_back(std::move(s));
  }

  std::size_t foreign = 0;
  std::size_t k = 0;
  for (const auto& r : dataset.records) {
    while (k < intervals.size() && intervals[k].end < r.timestamp) ++k;
    if (k == intervals.size() || !intervals[k].contains(r.timestamp)) {
      ++res.discarded;
      continue;
    }
    if (r.label.is_malicious() && r.label.attack_type() != intervals[k].attack_type) {
      ++res.discarded;
      ++foreign;
      continue;
    }
    res.scenarios[k].records.push_back(r);
  }

  for (const auto& s : res.scenarios)
    if (s.records.empty()) res.warnings.push_back("scenario '" + s.name + "' is empty");
  if (foreign)
    res.warnings.push_back(std::to_string(foreign) +
                           " malicious flows of other attack types fell inside intervals and were discarded");
  return res;
}

BenignScenarios make_benign_scenarios(const FlowDataset& dataset, std::size_t count,
                                      std::size_t target_len, std::string_view name_prefix) {
  BenignScenarios out;
  if (count == 0) return out;
  for (const auto& r : dataset.records)
    if (r.label.is_malicious())
      throw DataError("benign scenario source '" + dataset.source_name + "' contains malicious flows");

  const std::size_t n = dataset.size();
  std::size_t made = count;
  if (n < count) {
    made = n;
    out.warnings.push_back("only " + std::to_string(n) + " benign records; made " +
                           std::to_string(n) + " of " + std::to_string(count) + " benign scenarios");
  }
  if (made == 0) return out;

  std::vector<std::size_t> sizes(made, 0);
  if (target_len == 0 || target_len * made >= n) {
    if (target_len * made > n)
      out.warnings.push_back("benign source shorter than requested; scenarios split it evenly");
    for (std::size_t i = 0; i < made; ++i) sizes[i] = n / made + (i < n % made ? 1 : 0);
  } else {
    std::fill(sizes.begin(), sizes.end(), target_len);
  }

  std::size_t pos = 0;
  for (std::size_t i = 0; i < made; ++i) {
    Scenario s;
    s.name = std::string(name_prefix) + "-" + std::to_string(i + 1);
    s.attack_type = std::string(kBenignType);
    s.records.assign(dataset.records.begin() + static_cast<std::ptrdiff_t>(pos),
                     dataset.records.begin() + static_cast<std::ptrdiff_t>(pos + sizes[i]));
    s.interval = {s.records.front().timestamp, s.records.back().timestamp, s.attack_type};
    pos += sizes[i];
    out.scenarios.push_back(std::move(s));
  }
  return out;
}

namespace {

std::size_t ceil_fraction(double fraction, std::size_t n) {
  // The epsilon keeps 0.7 * 10 at 7 despite 0.7 not being representable.
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

}  // namespace

std::size_t split_point(std::span<const FlowRecord> records, const SplitOptions& options,
                        std::optional<std::string>* warning) {
  if (!(options.train_fraction > 0.0 && options.train_fraction <= 1.0))
    throw ConfigError("train_fraction must be in (0, 1]");
  if (!(options.min_malicious_train_fraction >= 0.0 && options.min_malicious_train_fraction <= 1.0))
    throw ConfigError("min_malicious_train_fraction must be in [0, 1]");
  const std::size_t n = records.size();
  if (n == 0) throw DataError("cannot split an empty scenario");

  const std::size_t base = std::clamp<std::size_t>(ceil_fraction(options.train_fraction, n), 1, n);
  std::size_t total_mal = 0;
  for (const auto& r : records) total_mal += r.label.is_malicious();
  const std::size_t need = ceil_fraction(options.min_malicious_train_fraction, total_mal);

  std::size_t k = 0;
  std::size_t mal = 0;
  for (; k < base; ++k) mal += records[k].label.is_malicious();
  while (mal < need && k < n) mal += records[k++].label.is_malicious();
  while (k < n && records[k].timestamp == records[k - 1].timestamp) ++k;

  if (k == n && base < n) {
    if (warning)
      *warning = "split rules leave no test records; fell back to the plain " +
                 format_double(options.train_fraction) + " prefix";
    return base;
  }
  return k;
}

ScenarioSplit split_scenario(const Scenario& scenario, const SplitOptions& options) {
  ScenarioSplit s;
  const std::size_t k = split_point(scenario.records, options, &s.warning);
  s.train.assign(scenario.records.begin(), scenario.records.begin() + static_cast<std::ptrdiff_t>(k));
  s.test.assign(scenario.records.begin() + static_cast<std::ptrdiff_t>(k), scenario.records.end());
  s.train_fraction_used = static_cast<double>(k) / static_cast<double>(scenario.records.size());
  return s;
}

ManifestRow manifest_row(const Scenario& scenario, const ScenarioSplit& split) {
  ManifestRow row;
  row.name = scenario.name;
  row.attack_type = scenario.attack_type;
  row.start = scenario.interval.start;
  row.end = scenario.interval.end;
  for (const auto& r : split.train) (r.label.is_malicious() ? row.train_malicious : row.train_benign)++;
  for (const auto& r : split.test) (r.label.is_malicious() ? row.test_malicious : row.test_benign)++;
  row.malicious = row.train_malicious + row.test_malicious;
  row.benign = row.train_benign + row.test_benign;
  if (split.warning) row.note = *split.warning;
  return row;
}

namespace {

constexpr const char* kManifestHeader =
    "name\tattack_type\tstart\tend\trecords\tbenign\tmalicious\ttrain\ttest\ttrain_benign\t"
    "train_malicious\ttest_benign\ttest_malicious\tnote";

}  // namespace

void write_manifest(std::ostream& out, const Manifest& m) {
  out << "# discarded: " << m.discarded << '\n';
  for (const auto& n : m.notes) out << "# " << n << '\n';
  out << kManifestHeader << '\n';
  for (const auto& r : m.rows) {
    out << r.name << '\t' << r.attack_type << '\t' << format_double(r.start) << '\t'
        << format_double(r.end) << '\t' << r.records() << '\t' << r.benign << '\t' << r.malicious
        << '\t' << r.train() << '\t' << r.test() << '\t' << r.train_benign << '\t'
        << r.train_malicious << '\t' << r.test_benign << '\t' << r.test_malicious << '\t'
        << (r.note.empty() ? "-" : r.note) << '\n';
  }
}

Manifest read_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(line.find_first_not_of("# "));
      if (body.rfind("discarded:", 0) == 0)
        m.discarded = std::stoull(body.substr(10));
      else
        m.notes.push_back(body);
      continue;
    }
    if (!header_seen) {
      if (line != kManifestHeader) throw DataError("manifest header mismatch");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) f.push_back(cell);
    if (f.size() != 14) throw DataError("manifest row has " + std::to_string(f.size()) + " fields");
    ManifestRow r;
    try {
      r.name = f[0];
      r.attack_type = f[1];
      r.start = std::stod(f[2]);
      r.end = std::stod(f[3]);
      r.benign = std::stoull(f[5]);
      r.malicious = std::stoull(f[6]);
      r.train_benign = std::stoull(f[9]);
      r.train_malicious = std::stoull(f[10]);
      r.test_benign = std::stoull(f[11]);
      r.test_malicious = std::stoull(f[12]);
    } catch (const std::exception&) {
      throw DataError("malformed manifest row for '" + f[0] + "'");
    }
    r.note = f[13] == "-" ? "" : f[13];
    m.rows.push_back(std::move(r));
  }
  if (!header_seen) throw DataError("manifest has no header");
  return m;
}

}  // namespace flowseq
