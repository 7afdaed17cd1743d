#include "flowseq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "flowseq/error.hpp"

namespace flowseq {

void SynthConfig::validate() const {
  if (n_records == 0) throw ConfigError("synth: n_records must be >= 1");
  if (!(malicious_fraction > 0.0 && malicious_fraction < 1.0))
    throw ConfigError("synth: malicious_fraction must be in (0, 1)");
  if (burst_len < 1) throw ConfigError("synth: burst_len must be >= 1");
  if (trigger_ngram > synth_vocabulary().size())
    throw ConfigError("synth: trigger_ngram cannot exceed the token vocabulary (" +
                      std::to_string(synth_vocabulary().size()) + ")");
  if (campaigns < 1) throw ConfigError("synth: campaigns must be >= 1");
  if (!(campaign_share > 0.0 && campaign_share <= 1.0)) throw ConfigError("synth: campaign_share must be in (0, 1]");
  if (!(static_shift > 0.0)) throw ConfigError("synth: static_shift must be > 0");
  if (beacon_period) {
    const double p = *beacon_period;
    if (!(p >= 1.0) || p != std::floor(p)) throw ConfigError("synth: beacon_period must be a whole number >= 1");
    if (p < static_cast<double>(burst_len + trigger_ngram))
      throw ConfigError("synth: beacon_period shorter than trigger + burst");
  }
  for (double s : {noise.duration_sigma, noise.packets_sigma, noise.bytes_per_packet_sigma})
    if (!(s >= 0.0)) throw ConfigError("synth: noise sigmas must be >= 0");
  if (attack_type.empty()) throw ConfigError("synth: attack_type must be non-empty");
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json j{{"n_records", n_records},
                   {"malicious_fraction", malicious_fraction},
                   {"burst_len", burst_len},
                   {"trigger_ngram", trigger_ngram},
                   {"campaigns", campaigns},
                   {"campaign_share", campaign_share},
                   {"static_shift", static_shift},
                   {"start_time", start_time},
                   {"attack_type", attack_type},
                   {"style", std::string(to_string(style))},
                   {"seed", seed},
                   {"noise",
                    {{"duration_mu", noise.duration_mu},
                     {"duration_sigma", noise.duration_sigma},
                     {"packets_mu", noise.packets_mu},
                     {"packets_sigma", noise.packets_sigma},
                     {"bytes_per_packet_mu", noise.bytes_per_packet_mu},
                     {"bytes_per_packet_sigma", noise.bytes_per_packet_sigma}}}};
  j["beacon_period"] = beacon_period ? nlohmann::json(*beacon_period) : nlohmann::json(nullptr);
  return j;
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  if (!j.is_object()) throw ConfigError("synth config must be an object");
  static const std::set<std::string> known = {"n_records",   "malicious_fraction", "beacon_period", "burst_len",
                                              "trigger_ngram", "campaigns",        "campaign_share", "noise",
                                              "static_shift", "start_time",       "attack_type",   "style",
                                              "seed"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("synth config: unknown key '" + k + "'");
  try {
    auto get = [&](const char* k, auto& field) {
      if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
    };
    get("n_records", c.n_records);
    get("malicious_fraction", c.malicious_fraction);
    get("burst_len", c.burst_len);
    get("trigger_ngram", c.trigger_ngram);
    get("campaigns", c.campaigns);
    get("campaign_share", c.campaign_share);
    get("static_shift", c.static_shift);
    get("start_time", c.start_time);
    get("attack_type", c.attack_type);
    get("seed", c.seed);
    if (j.contains("style")) c.style = parse_schema_style(j.at("style").get<std::string>());
    if (j.contains("beacon_period") && !j.at("beacon_period").is_null())
      c.beacon_period = j.at("beacon_period").get<double>();
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      for (const auto& [k, v] : n.items())
        if (k.find("_mu") == std::string::npos && k.find("_sigma") == std::string::npos)
          throw ConfigError("synth config: unknown noise key '" + k + "'");
      auto getn = [&](const char* k, double& field) {
        if (n.contains(k)) field = n.at(k).get<double>();
      };
      getn("duration_mu", c.noise.duration_mu);
      getn("duration_sigma", c.noise.duration_sigma);
      getn("packets_mu", c.noise.packets_mu);
      getn("packets_sigma", c.noise.packets_sigma);
      getn("bytes_per_packet_mu", c.noise.bytes_per_packet_mu);
      getn("bytes_per_packet_sigma", c.noise.bytes_per_packet_sigma);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

const std::vector<SynthToken>& synth_vocabulary() {
  static const std::vector<SynthToken> v{{"tcp", 80},  {"tcp", 443}, {"udp", 53},  {"tcp", 22},
                                         {"tcp", 25},  {"udp", 123}, {"tcp", 8080}, {"udp", 5353}};
  return v;
}

namespace {

using Rng = std::mt19937_64;

// Burst placements in slot units: malicious records occupy [mal_start, mal_start + burst_len).
struct Layout {
  std::vector<std::vector<std::size_t>> mal_starts;  // per campaign
};

Layout place_bursts(const SynthConfig& c, Rng& rng) {
  const std::size_t n = c.n_records;
  const std::size_t total_bursts = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * c.malicious_fraction /
                                                static_cast<double>(c.burst_len))));
  if (total_bursts < c.campaigns)
    throw ConfigError("synth: " + std::to_string(total_bursts) + " bursts cannot fill " +
                      std::to_string(c.campaigns) + " campaigns");
  const std::size_t W = static_cast<std::size_t>(c.campaign_share * static_cast<double>(n)) / c.campaigns;
  const std::size_t G = (n - c.campaigns * W) / (c.campaigns + 1);
  const std::size_t L = c.trigger_ngram + c.burst_len;

  Layout lay;
  for (std::size_t ci = 0; ci < c.campaigns; ++ci) {
    const std::size_t k = total_bursts / c.campaigns + (ci < total_bursts % c.campaigns ? 1 : 0);
    const std::size_t base = G + ci * (W + G);
    std::vector<std::size_t> starts;
    if (c.beacon_period) {
      const auto P = static_cast<std::size_t>(*c.beacon_period);
      const std::size_t span = (k - 1) * P + L;
      if (span > W)
        throw ConfigError("synth: beacon bursts need " + std::to_string(span) + " slots per campaign but windows hold " +
                          std::to_string(W) + "; lower malicious_fraction or the period");
      std::uniform_int_distribution<std::size_t> off(0, W - span);
      const std::size_t first = base + off(rng) + c.trigger_ngram;
      for (std::size_t b = 0; b < k; ++b) starts.push_back(first + b * P);
    } else {
      if (k * L > W)
        throw ConfigError("synth: " + std::to_string(k) + " bursts of " + std::to_string(L) +
                          " slots do not fit a campaign window of " + std::to_string(W) + " slots");
      std::uniform_int_distribution<std::size_t> pick(0, W - k * L);
      std::vector<std::size_t> v(k);
      for (auto& x : v) x = pick(rng);
      std::sort(v.begin(), v.end());
      for (std::size_t b = 0; b < k; ++b) starts.push_back(base + v[b] + b * L + c.trigger_ngram);
    }
    lay.mal_starts.push_back(std::move(starts));
  }
  return lay;
}

double lognormal(Rng& rng, double mu, double sigma) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return std::exp(mu + sigma * nd(rng));
}

}  // namespace

SynthResult generate(const SynthConfig& c) {
  c.validate();
  Rng rng(c.seed);
  const auto& vocab = synth_vocabulary();
  const std::size_t n = c.n_records;

  // The trigger: the first trigger_ngram tokens of a seeded permutation.
  std::vector<std::size_t> perm(vocab.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::vector<std::size_t> trig(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(c.trigger_ngram));

  const Layout lay = place_bursts(c, rng);
  std::vector<char> malicious(n, 0);
  std::vector<char> designated(n, 0);  // first slot of a planted trigger
  for (const auto& starts : lay.mal_starts)
    for (auto s : starts) {
      for (std::size_t k = 0; k < c.burst_len; ++k) malicious[s + k] = 1;
      if (c.trigger_ngram > 0) designated[s - c.trigger_ngram] = 1;
    }

  std::uniform_int_distribution<std::size_t> tok(0, vocab.size() - 1);
  std::vector<std::size_t> token(n);
  for (auto& t : token) t = tok(rng);
  for (std::size_t i = 0; i < n; ++i)
    if (designated[i])
      for (std::size_t k = 0; k < c.trigger_ngram; ++k) token[i + k] = trig[k];
  // Break accidental trigger occurrences by redrawing their last token.
  const std::size_t m = c.trigger_ngram;
  if (m > 0) {
    for (std::size_t end = m - 1; end < n; ++end) {
      const std::size_t begin = end + 1 - m;
      if (designated[begin]) continue;
      while (std::equal(trig.begin(), trig.end(), token.begin() + static_cast<std::ptrdiff_t>(begin)))
        token[end] = tok(rng);
    }
  }

  SynthResult out;
  out.dataset.style = c.style;
  out.dataset.source_name = "synth";
  out.dataset.records.reserve(n);
  for (auto t : trig) out.trigger.push_back(vocab[t]);
  std::uniform_real_distribution<double> jitter(0.0, 0.4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> sport(49152, 65535);
  std::uniform_int_distribution<int> shost(1, 20);
  std::uniform_int_distribution<int> dhost(1, 50);
  for (std::size_t i = 0; i < n; ++i) {
    FlowRecord r;
    r.timestamp = c.start_time + static_cast<double>(i) + jitter(rng);
    r.duration = lognormal(rng, c.noise.duration_mu, c.noise.duration_sigma);
    r.protocol = vocab[token[i]].protocol;
    r.src_port = static_cast<std::uint16_t>(sport(rng));
    r.dst_port = vocab[token[i]].dst_port;
    r.direction = unit(rng) < 0.7 ? Direction::Outbound : Direction::Inbound;
    r.total_packets = 1 + static_cast<std::uint64_t>(lognormal(rng, c.noise.packets_mu, c.noise.packets_sigma));
    const double bpp = lognormal(rng, c.noise.bytes_per_packet_mu, c.noise.bytes_per_packet_sigma);
    double bytes = std::max(static_cast<double>(r.total_packets), std::round(bpp * static_cast<double>(r.total_packets)));
    const double src_share = 0.1 + 0.8 * unit(rng);
    const double iat_u1 = unit(rng), iat_u2 = unit(rng);
    if (malicious[i]) bytes = std::round(bytes * c.static_shift);
    r.total_bytes = static_cast<std::uint64_t>(std::max(1.0, bytes));
    r.src_bytes = static_cast<std::uint64_t>(std::floor(src_share * static_cast<double>(r.total_bytes)));
    if (c.style == SchemaStyle::Cicids) {
      const double avg = r.duration / static_cast<double>(std::max<std::uint64_t>(1, r.total_packets - 1));
      r.iat_avg = avg;
      r.iat_min = avg * iat_u1;
      r.iat_max = avg * (1.0 + 3.0 * iat_u2);
    }
    r.src_host = "10.0.0." + std::to_string(shost(rng));
    r.dst_host = "203.0.113." + std::to_string(dhost(rng));
    r.label = malicious[i] ? Label::malicious(c.attack_type) : Label::benign();
    out.dataset.records.push_back(std::move(r));
  }

  // Ground truth and a gap threshold that separates campaigns.
  double max_intra = 0.0;
  double min_inter = std::numeric_limits<double>::infinity();
  double prev_end = -std::numeric_limits<double>::infinity();
  for (const auto& starts : lay.mal_starts) {
    const auto& recs = out.dataset.records;
    const std::size_t first = starts.front();
    const std::size_t last = starts.back() + c.burst_len - 1;
    double prev = recs[first].timestamp;
    for (std::size_t i = first + 1; i <= last; ++i)
      if (malicious[i]) {
        max_intra = std::max(max_intra, recs[i].timestamp - prev);
        prev = recs[i].timestamp;
      }
    min_inter = std::min(min_inter, recs[first].timestamp - prev_end);
    prev_end = recs[last].timestamp;
    out.intervals.push_back({recs[first].timestamp, recs[last].timestamp, c.attack_type});
  }
  if (c.campaigns > 1 && !(max_intra < min_inter))
    throw ConfigError("synth: campaigns are not separable by a gap threshold; lower campaign_share");
  out.gap_threshold = c.campaigns > 1 ? 0.5 * (max_intra + min_inter) : max_intra + 1.0;
  out.padding = static_cast<double>(c.trigger_ngram) + 0.5;
  if (c.campaigns > 1 && 2.0 * out.padding >= min_inter - max_intra)
    throw ConfigError("synth: campaigns too close for the trigger padding");
  return out;
}

void write_intervals(std::ostream& out, const SynthResult& r) {
  out << "# gap_threshold: " << format_double(r.gap_threshold) << '\n';
  out << "# padding: " << format_double(r.padding) << '\n';
  out << "attack_type,start,end\n";
  for (const auto& iv : r.intervals)
    out << iv.attack_type << ',' << format_double(iv.start) << ',' << format_double(iv.end) << '\n';
}

GroundTruth read_intervals(std::istream& in) {
  GroundTruth g;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) { return DataError("intervals line " + std::to_string(lineno) + ": " + why); };
    try {
      if (line.rfind("# gap_threshold:", 0) == 0) {
        g.gap_threshold = std::stod(line.substr(16));
        continue;
      }
      if (line.rfind("# padding:", 0) == 0) {
        g.padding = std::stod(line.substr(10));
        continue;
      }
      if (line[0] == '#') continue;
      if (!header) {
        if (line != "attack_type,start,end") throw fail("expected header attack_type,start,end");
        header = true;
        continue;
      }
      std::stringstream ss(line);
      std::string a, s, e;
      if (!std::getline(ss, a, ',') || !std::getline(ss, s, ',') || !std::getline(ss, e)) throw fail("expected 3 fields");
      g.intervals.push_back({std::stod(s), std::stod(e), a});
    } catch (const std::logic_error&) {
      throw fail("bad number");
    }
  }
  return g;
}

}  // namespace flowseq
