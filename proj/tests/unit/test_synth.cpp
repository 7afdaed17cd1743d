#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flowseq/error.hpp"
#include "flowseq/scenario.hpp"
#include "flowseq/synth.hpp"
#include "support.hpp"

using namespace flowseq;

namespace {

std::vector<double> malicious_times(const FlowDataset& d) {
  std::vector<double> ts;
  for (const auto& r : d.records)
    if (r.label.is_malicious()) ts.push_back(r.timestamp);
  return ts;
}

struct Moments {
  double mean = 0, var = 0;
  std::size_t n = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = v.size();
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(m.n - 1);
  return m;
}

// Welch z-statistic for a difference in means.
double welch_z(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ma = moments(a), mb = moments(b);
  return (ma.mean - mb.mean) /
         std::sqrt(ma.var / static_cast<double>(ma.n) + mb.var / static_cast<double>(mb.n));
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  SynthConfig c;
  c.n_records = 3000;
  c.seed = 4;
  const auto a = generate(c), b = generate(c);
  CHECK(a.dataset == b.dataset);
  CHECK(a.intervals == b.intervals);
  c.seed = 5;
  CHECK_FALSE(generate(c).dataset == a.dataset);
}

TEST_CASE("realized malicious fraction on 1e5 records") {
  for (double frac : {0.05, 0.1, 0.3}) {
    SynthConfig c;
    c.n_records = 100000;
    c.malicious_fraction = frac;
    c.seed = 1;
    const auto r = generate(c);
    CHECK(r.dataset.size() == 100000);
    const double share = static_cast<double>(malicious_times(r.dataset).size()) / 1e5;
    CHECK(std::abs(share - frac) <= 0.01);
  }
}

TEST_CASE("beacon period round trip") {
  for (double period : {7.0, 10.0, 60.0}) {
    SynthConfig c;
    c.n_records = 20000;
    c.malicious_fraction = 0.3 / period;  // half of what the campaign window can hold
    c.burst_len = 1;
    c.trigger_ngram = 0;
    c.campaigns = 1;
    c.beacon_period = period;
    c.seed = 2;
    const auto r = generate(c);
    const auto ts = malicious_times(r.dataset);
    CHECK(beacon_period(ts, 1.0, 100) == std::optional<double>(period));
  }
}

TEST_CASE("trigger precedes every burst and never appears elsewhere") {
  SynthConfig c;
  c.n_records = 5000;
  c.seed = 3;
  const auto r = generate(c);
  const auto& recs = r.dataset.records;
  REQUIRE(r.trigger.size() == 3);
  auto token_at = [&](std::size_t i) { return SynthToken{recs[i].protocol, recs[i].dst_port.value_or(0)}; };
  std::size_t bursts = 0;
  for (std::size_t i = 3; i < recs.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < 3; ++k) match = match && token_at(i - 3 + k) == r.trigger[k];
    const bool burst_start = recs[i].label.is_malicious() && !recs[i - 1].label.is_malicious();
    if (burst_start) {
      ++bursts;
      CHECK(match);
    }
    if (match) CHECK(recs[i].label.is_malicious());
  }
  CHECK(bursts > 0);
}

TEST_CASE("per-record marginals match between classes") {
  SynthConfig c;
  c.n_records = 40000;
  c.seed = 6;
  const auto r = generate(c);
  std::vector<double> mb, bb, mp, bp, md, bd;
  for (const auto& x : r.dataset.records) {
    auto& bytes = x.label.is_malicious() ? mb : bb;
    auto& pk = x.label.is_malicious() ? mp : bp;
    auto& du = x.label.is_malicious() ? md : bd;
    bytes.push_back(std::log(static_cast<double>(x.total_bytes) + 1.0));
    pk.push_back(std::log(static_cast<double>(x.total_packets) + 1.0));
    du.push_back(std::log(x.duration + 1e-3));
  }
  CHECK(std::abs(welch_z(mb, bb)) < 4.0);
  CHECK(std::abs(welch_z(mp, bp)) < 4.0);
  CHECK(std::abs(welch_z(md, bd)) < 4.0);

  // the static control shifts bytes by far more than the noise
  c.static_shift = 20.0;
  const auto s = generate(c);
  std::vector<double> sm, sb;
  for (const auto& x : s.dataset.records)
    (x.label.is_malicious() ? sm : sb).push_back(std::log(static_cast<double>(x.total_bytes) + 1.0));
  CHECK(welch_z(sm, sb) > 20.0);
}

TEST_CASE("ground-truth intervals are recovered by detect_intervals") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig c;
    c.n_records = 8000;
    c.seed = seed;
    const auto r = generate(c);
    const auto iv = detect_intervals(r.dataset, c.attack_type, {.gap_threshold = r.gap_threshold, .padding = 0.0});
    CHECK(iv == r.intervals);
    CHECK(r.intervals.size() == c.campaigns);
  }
}

TEST_CASE("intervals file round trip") {
  SynthConfig c;
  c.n_records = 2000;
  const auto r = generate(c);
  std::ostringstream out;
  write_intervals(out, r);
  std::istringstream in(out.str());
  const auto g = read_intervals(in);
  CHECK(g.intervals.size() == r.intervals.size());
  for (std::size_t i = 0; i < g.intervals.size(); ++i) {
    CHECK(g.intervals[i].start == r.intervals[i].start);
    CHECK(g.intervals[i].end == r.intervals[i].end);
  }
  REQUIRE(g.gap_threshold.has_value());
  CHECK(*g.gap_threshold == r.gap_threshold);
}

TEST_CASE("invalid and infeasible configs") {
  SynthConfig c;
  c.malicious_fraction = 0.0;
  CHECK_THROWS_AS(generate(c), ConfigError);
  c = SynthConfig{};
  c.burst_len = 0;
  CHECK_THROWS_AS(generate(c), ConfigError);
  c = SynthConfig{};
  c.n_records = 1000;
  c.malicious_fraction = 0.9;
  CHECK_THROWS(generate(c));
  c = SynthConfig{};
  c.n_records = 1000;
  c.burst_len = 1;
  c.campaigns = 1;
  c.beacon_period = 2.0;
  c.malicious_fraction = 0.5;
  CHECK_THROWS(generate(c));
}

TEST_CASE("synth config json round trip") {
  SynthConfig c;
  c.beacon_period = 10;
  c.seed = 99;
  c.noise.bytes_per_packet_sigma = 0.25;
  CHECK(SynthConfig::from_json(c.to_json()) == c);
  CHECK_THROWS_AS(SynthConfig::from_json(nlohmann::json{{"n_record", 5}}), ConfigError);
}
