#include "flowseq/cli/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "flowseq/error.hpp"

namespace flowseq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) throw ConfigError("empty path in config");
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal().string();
  return (fs::path(base) / path).lexically_normal().string();
}

void check_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [k, _] : j.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* x) { return k == x; }))
      throw ConfigError("unknown key '" + k + "' in " + where);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const std::string& base_dir, std::optional<std::uint64_t> seed_override,
                               std::optional<std::string> output_override) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j,
             {"dataset_style", "datasets", "schema", "internal_hosts", "excluded_hosts", "intervals", "auto_detect",
              "extraction", "features", "fnn", "lstm", "evaluation", "output_dir", "seed"},
             "config");
  RunConfig c;
  c.source = j;
  try {
    c.style = parse_schema_style(j.value("dataset_style", std::string("ctu13")));
    c.seed = seed_override ? *seed_override : j.value("seed", std::uint64_t{0});
    c.source["seed"] = c.seed;

    if (!j.contains("datasets") || !j.at("datasets").is_array() || j.at("datasets").empty())
      throw ConfigError("config needs a non-empty 'datasets' list");
    for (const auto& d : j.at("datasets")) {
      check_keys(d, {"path", "role"}, "datasets entry");
      DatasetRef ref;
      ref.path = resolve(base_dir, d.at("path").get<std::string>());
      const auto role = d.value("role", std::string("attack"));
      if (role == "attack") ref.role = DatasetRole::Attack;
      else if (role == "benign") ref.role = DatasetRole::Benign;
      else throw ConfigError("dataset role must be attack or benign, got '" + role + "'");
      c.datasets.push_back(std::move(ref));
    }

    json schema = FlowSchema::canonical(c.style).to_json();
    if (j.contains("schema")) {
      schema.merge_patch(j.at("schema"));
      if (j.at("schema").contains("columns")) schema["columns"] = j.at("schema").at("columns");
    }
    schema["style"] = std::string(to_string(c.style));
    if (j.contains("internal_hosts")) schema["internal_hosts"] = j.at("internal_hosts");
    c.schema = FlowSchema::from_json(schema);
    if (j.contains("excluded_hosts"))
      c.excluded_hosts = HostSet(j.at("excluded_hosts").get<std::vector<std::string>>());

    if (j.contains("intervals")) {
      for (const auto& iv : j.at("intervals")) {
        check_keys(iv, {"attack_type", "start", "end"}, "intervals entry");
        Interval x{iv.at("start").get<double>(), iv.at("end").get<double>(), iv.at("attack_type").get<std::string>()};
        if (!(x.start <= x.end)) throw ConfigError("interval for '" + x.attack_type + "' has start > end");
        c.intervals.push_back(std::move(x));
      }
      std::sort(c.intervals.begin(), c.intervals.end(),
                [](const Interval& a, const Interval& b) { return a.start < b.start; });
    }
    if (j.contains("auto_detect")) {
      const auto& a = j.at("auto_detect");
      if (a.is_boolean())
        c.auto_detect_all = a.get<bool>();
      else
        c.auto_detect = a.get<std::vector<std::string>>();
    }
    for (const auto& iv : c.intervals)
      if (c.auto_detects(iv.attack_type))
        throw ConfigError("attack type '" + iv.attack_type + "' has documented intervals and is also auto-detected");

    if (j.contains("extraction")) {
      const auto& e = j.at("extraction");
      check_keys(e,
                 {"gap_threshold", "padding", "benign_scenarios", "benign_target_len", "train_fraction",
                  "min_malicious_train_fraction"},
                 "extraction");
      if (e.contains("gap_threshold") && !e.at("gap_threshold").is_null()) {
        c.extraction.gap_threshold = e.at("gap_threshold").get<double>();
        if (!(*c.extraction.gap_threshold > 0.0)) throw ConfigError("gap_threshold must be > 0");
      }
      c.extraction.padding = e.value("padding", 0.0);
      if (!(c.extraction.padding >= 0.0)) throw ConfigError("padding must be >= 0");
      c.extraction.benign_scenarios = e.value("benign_scenarios", std::size_t{0});
      c.extraction.benign_target_len = e.value("benign_target_len", std::size_t{0});
      c.extraction.split.train_fraction = e.value("train_fraction", 0.7);
      c.extraction.split.min_malicious_train_fraction = e.value("min_malicious_train_fraction", 0.7);
    }
    const auto& sp = c.extraction.split;
    if (!(sp.train_fraction > 0.0 && sp.train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");
    if (!(sp.min_malicious_train_fraction >= 0.0 && sp.min_malicious_train_fraction <= 1.0))
      throw ConfigError("min_malicious_train_fraction must be in [0, 1]");

    c.features = j.contains("features") ? FeatureSpec::from_json(j.at("features")) : FeatureSpec::for_style(c.style);

    for (auto kind : {nn::ModelKind::Fnn, nn::ModelKind::Lstm}) {
      auto base = nn::reference_defaults(c.style, kind);
      base.seed = c.seed;
      const char* key = kind == nn::ModelKind::Fnn ? "fnn" : "lstm";
      auto cfg = j.contains(key) ? nn::TrainConfig::from_json(j.at(key), base) : base;
      if (seed_override) cfg.seed = *seed_override;
      (kind == nn::ModelKind::Fnn ? c.fnn : c.lstm) = cfg;
    }
    if (j.contains("evaluation")) {
      check_keys(j.at("evaluation"), {"warmup_len"}, "evaluation");
      c.warmup_len = j.at("evaluation").value("warmup_len", std::size_t{0});
    }
    const std::string out = output_override ? *output_override : j.value("output_dir", std::string("flowseq-out"));
    c.output_dir = output_override ? fs::path(out).lexically_normal().string() : resolve(base_dir, out);
    c.source["output_dir"] = c.output_dir;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path, std::optional<std::uint64_t> seed_override,
                          std::optional<std::string> output_override) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  const auto base = fs::path(path).parent_path().string();
  return from_json(j, base, seed_override, output_override);
}

bool RunConfig::auto_detects(const std::string& t) const {
  return auto_detect_all || std::find(auto_detect.begin(), auto_detect.end(), t) != auto_detect.end();
}

std::string RunConfig::hash() const { return hex64(fnv1a64(source.dump())); }

}  // namespace flowseq::cli
