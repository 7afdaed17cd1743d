#include "flowseq/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "flowseq/error.hpp"

namespace flowseq {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
  tp += o.tp;
  fn += o.fn;
  tn += o.tn;
  fp += o.fp;
  return *this;
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw DataError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] != 0;
    if (truth[i] != 0)
      ++(p ? cm.tp : cm.fn);
    else
      ++(p ? cm.fp : cm.tn);
  }
  return cm;
}

std::optional<double> f1(const ConfusionMatrix& cm) {
  const double den = 2.0 * static_cast<double>(cm.tp) + static_cast<double>(cm.fp) + static_cast<double>(cm.fn);
  if (den == 0.0) return std::nullopt;
  return 100.0 * 2.0 * static_cast<double>(cm.tp) / den;
}

std::string format_f1(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

EvalReport scenario_report(std::vector<ReportRow> rows) {
  EvalReport r;
  r.summary.name = "Summary";
  for (const auto& row : rows) r.summary.cm += row.cm;
  r.rows = std::move(rows);
  return r;
}

DeltaReport delta_report(const EvalReport& ens, const EvalReport& base) {
  if (ens.rows.size() != base.rows.size())
    throw DataError("delta report: " + std::to_string(ens.rows.size()) + " vs " +
                    std::to_string(base.rows.size()) + " scenarios");
  auto delta = [](const ReportRow& e, const ReportRow& b) {
    DeltaRow d;
    d.name = e.name;
    d.ensemble = e.cm;
    d.delta_fn = static_cast<std::int64_t>(e.cm.fn) - static_cast<std::int64_t>(b.cm.fn);
    d.delta_fp = static_cast<std::int64_t>(e.cm.fp) - static_cast<std::int64_t>(b.cm.fp);
    return d;
  };
  DeltaReport r;
  for (std::size_t i = 0; i < ens.rows.size(); ++i) {
    if (ens.rows[i].name != base.rows[i].name)
      throw DataError("delta report: scenario '" + ens.rows[i].name + "' paired with '" + base.rows[i].name + "'");
    r.rows.push_back(delta(ens.rows[i], base.rows[i]));
  }
  r.summary = delta(ens.summary, base.summary);
  return r;
}

namespace {

void csv_row(std::ostream& out, const ReportRow& r) {
  out << r.name << ',' << format_f1(r.f1()) << ',' << r.cm.tp << ',' << r.cm.fn << ',' << r.cm.tn << ','
      << r.cm.fp << '\n';
}

std::string signed_str(std::int64_t v) { return v > 0 ? "+" + std::to_string(v) : std::to_string(v); }

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& cells, std::size_t summary_at,
                 const std::string& title) {
  std::vector<std::size_t> w(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());
  std::size_t total = 0;
  for (auto x : w) total += x + 2;
  if (!title.empty()) out << title << '\n';
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (r == 1 || r == summary_at) out << std::string(total - 2, '-') << '\n';
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& s = cells[r][c];
      const std::string pad(w[c] - s.size(), ' ');
      if (c == 0)
        out << s << pad;
      else
        out << "  " << pad << s;
    }
    out << '\n';
  }
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "scenario,f1,tp,fn,tn,fp\n";
  for (const auto& r : report.rows) csv_row(out, r);
  csv_row(out, report.summary);
}

void write_report_table(std::ostream& out, const EvalReport& report, const std::string& title) {
  std::vector<std::vector<std::string>> cells{{"Scenario", "F1", "tp", "fn", "tn", "fp"}};
  auto add = [&](const ReportRow& r) {
    cells.push_back({r.name, format_f1(r.f1()), std::to_string(r.cm.tp), std::to_string(r.cm.fn),
                     std::to_string(r.cm.tn), std::to_string(r.cm.fp)});
  };
  for (const auto& r : report.rows) add(r);
  add(report.summary);
  print_table(out, cells, cells.size() - 1, title);
}

void write_delta_csv(std::ostream& out, const DeltaReport& report) {
  out << "scenario,netflows,malicious,f1,fn,fp,delta_fn,delta_fp\n";
  auto row = [&](const DeltaRow& d) {
    out << d.name << ',' << d.ensemble.total() << ',' << d.ensemble.tp + d.ensemble.fn << ','
        << format_f1(d.f1()) << ',' << d.ensemble.fn << ',' << d.ensemble.fp << ',' << signed_str(d.delta_fn)
        << ',' << signed_str(d.delta_fp) << '\n';
  };
  for (const auto& d : report.rows) row(d);
  row(report.summary);
}

void write_delta_table(std::ostream& out, const DeltaReport& report, const std::string& title) {
  std::vector<std::vector<std::string>> cells{{"Scenario", "#NetFlows", "#Mal", "F1", "fn", "fp", "+-fn", "+-fp"}};
  auto add = [&](const DeltaRow& d) {
    cells.push_back({d.name, std::to_string(d.ensemble.total()), std::to_string(d.ensemble.tp + d.ensemble.fn),
                     format_f1(d.f1()), std::to_string(d.ensemble.fn), std::to_string(d.ensemble.fp),
                     signed_str(d.delta_fn), signed_str(d.delta_fp)});
  };
  for (const auto& d : report.rows) add(d);
  add(report.summary);
  print_table(out, cells, cells.size() - 1, title);
}

std::vector<ReportRow> read_confusion_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("confusion file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) header.push_back(c);
  }
  auto has = [&](const std::string& name) { return std::find(header.begin(), header.end(), name) != header.end(); };
  auto col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("confusion file lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  // Either explicit tp/tn, or the delta-table shape with record totals (netflows, malicious).
  const bool totals = !(has("tp") && has("tn")) && has("netflows") && has("malicious");
  const std::size_t ci = col("scenario"), cfn = col("fn"), cfp = col("fp");
  const std::size_t ctp = totals ? col("malicious") : col("tp");
  const std::size_t ctn = totals ? col("netflows") : col("tn");
  std::vector<ReportRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) f.push_back(c);
    if (f.size() != header.size())
      throw DataError("confusion line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                      " fields");
    if (f[ci] == "Summary" || f[ci] == "summary") continue;
    auto count = [&](std::size_t k) -> std::uint64_t {
      const auto& s = f[k];
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw DataError("confusion line " + std::to_string(lineno) + ": bad count '" + s + "'");
      return std::stoull(s);
    };
    if (!totals) {
      rows.push_back({f[ci], {count(ctp), count(cfn), count(ctn), count(cfp)}});
      continue;
    }
    const auto n = count(ctn), m = count(ctp), fn = count(cfn), fp = count(cfp);
    if (m > n || fn > m || fp > n - m)
      throw DataError("confusion line " + std::to_string(lineno) + ": counts exceed the record totals");
    rows.push_back({f[ci], {m - fn, fn, n - m - fp, fp}});
  }
  return rows;
}

}  // namespace flowseq
