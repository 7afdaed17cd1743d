#include "flowseq/features.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "flowseq/error.hpp"

namespace flowseq {

namespace {

const std::set<std::string>& known_numeric() {
  static const std::set<std::string> names = {
      "duration",        "total_packets", "total_bytes",      "src_bytes", "packets_per_sec",
      "bytes_per_sec",   "bytes_per_packet", "iat_min",       "iat_max",   "iat_avg"};
  return names;
}

const std::set<std::string>& known_categorical() {
  static const std::set<std::string> names = {"protocol", "direction", "src_port", "dst_port"};
  return names;
}

bool is_port_feature(std::string_view name) { return name == "src_port" || name == "dst_port"; }

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Orders categories by descending frequency, then ascending value.
template <typename Key>
std::vector<Key> by_frequency(const std::map<Key, std::size_t>& counts) {
  std::vector<std::pair<Key, std::size_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<Key> out;
  out.reserve(v.size());
  for (auto& [k, _] : v) out.push_back(k);
  return out;
}

}  // namespace

DerivedFeatures derive_numeric(const FlowRecord& r) {
  const auto packets = static_cast<double>(r.total_packets);
  const auto bytes = static_cast<double>(r.total_bytes);
  return {safe_ratio(packets, r.duration), safe_ratio(bytes, r.duration), safe_ratio(bytes, packets)};
}

std::optional<double> numeric_value(const FlowRecord& r, std::string_view name) {
  if (name == "duration") return r.duration;
  if (name == "total_packets") return static_cast<double>(r.total_packets);
  if (name == "total_bytes") return static_cast<double>(r.total_bytes);
  if (name == "src_bytes") return static_cast<double>(r.src_bytes);
  if (name == "packets_per_sec") return derive_numeric(r).packets_per_sec;
  if (name == "bytes_per_sec") return derive_numeric(r).bytes_per_sec;
  if (name == "bytes_per_packet") return derive_numeric(r).bytes_per_packet;
  if (name == "iat_min") return r.iat_min;
  if (name == "iat_max") return r.iat_max;
  if (name == "iat_avg") return r.iat_avg;
  throw ConfigError("unknown numeric feature '" + std::string(name) + "'");
}

std::string category_token(const FlowRecord& r, std::string_view name) {
  if (name == "protocol") return r.protocol;
  if (name == "direction") return std::string(to_string(r.direction));
  if (is_port_feature(name)) {
    const auto& p = name == "src_port" ? r.src_port : r.dst_port;
    return p ? std::to_string(*p) : std::string(port_bucket::kAbsent);
  }
  throw ConfigError("unknown categorical feature '" + std::string(name) + "'");
}

std::string bucket_for_port(std::uint16_t port) {
  if (port <= 1023) return port_bucket::kWellKnown;
  if (port <= 49151) return port_bucket::kRegistered;
  return port_bucket::kEphemeral;
}

FeatureSpec FeatureSpec::ctu13() {
  FeatureSpec s;
  s.numeric = {"duration",      "total_packets", "packets_per_sec", "total_bytes",
               "src_bytes",     "bytes_per_sec", "bytes_per_packet"};
  s.categorical = {"src_port", "dst_port", "direction", "protocol"};
  return s;
}

FeatureSpec FeatureSpec::cicids() {
  FeatureSpec s;
  s.numeric = {"duration",         "total_packets", "total_bytes", "packets_per_sec",
               "bytes_per_packet", "iat_min",       "iat_max",     "iat_avg"};
  s.categorical = {"protocol", "direction", "src_port", "dst_port"};
  return s;
}

FeatureSpec FeatureSpec::for_style(SchemaStyle style) {
  return style == SchemaStyle::Ctu13 ? ctu13() : cicids();
}

void FeatureSpec::validate() const {
  std::set<std::string> seen;
  for (const auto& n : numeric) {
    if (!known_numeric().count(n)) throw ConfigError("unknown numeric feature '" + n + "'");
    if (!seen.insert(n).second) throw ConfigError("duplicate feature '" + n + "'");
  }
  for (const auto& n : categorical) {
    if (!known_categorical().count(n)) throw ConfigError("unknown categorical feature '" + n + "'");
    if (!seen.insert(n).second) throw ConfigError("duplicate feature '" + n + "'");
  }
  if (numeric.empty() && categorical.empty()) throw ConfigError("feature spec is empty");
}

FeatureSpec FeatureSpec::from_json(const nlohmann::json& j) {
  FeatureSpec s;
  try {
    s.numeric = j.at("numeric").get<std::vector<std::string>>();
    s.categorical = j.at("categorical").get<std::vector<std::string>>();
    if (j.contains("port_top_k")) {
      const auto k = j.at("port_top_k").get<long long>();
      if (k < 0) throw ConfigError("port_top_k must be >= 0");
      s.port_top_k = static_cast<std::size_t>(k);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("features: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json FeatureSpec::to_json() const {
  return {{"numeric", numeric}, {"categorical", categorical}, {"port_top_k", port_top_k}};
}

std::size_t Vocabulary::index_of(const std::string& token) const {
  auto it = std::find(categories.begin(), categories.end(), token);
  if (it == categories.end()) it = std::find(categories.begin(), categories.end(), kOtherCategory);
  return static_cast<std::size_t>(it - categories.begin());
}

Encoder::Encoder(FeatureSpec spec, std::vector<NumericRange> numeric,
                 std::vector<Vocabulary> vocabularies)
    : spec_(std::move(spec)), numeric_(std::move(numeric)), vocabularies_(std::move(vocabularies)) {
  if (numeric_.size() != spec_.numeric.size() || vocabularies_.size() != spec_.categorical.size())
    throw ConfigError("encoder does not match its feature spec");
  width_ = numeric_.size();
  for (const auto& r : numeric_)
    if (!(r.min <= r.max)) throw ConfigError("encoder range for '" + r.name + "' has min > max");
  for (const auto& v : vocabularies_) {
    if (v.categories.empty()) throw ConfigError("empty vocabulary for '" + v.name + "'");
    width_ += v.categories.size();
  }
  lookup_ = build_lookup();
}

std::vector<std::map<std::string, std::size_t>> Encoder::build_lookup() const {
  std::vector<std::map<std::string, std::size_t>> lk;
  for (const auto& v : vocabularies_) {
    std::map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < v.categories.size(); ++i) m.emplace(v.categories[i], i);
    lk.push_back(std::move(m));
  }
  return lk;
}

void Encoder::encode_into(const FlowRecord& r, std::span<double> out) const {
  if (out.size() != width_) throw ConfigError("encode output has wrong width");
  std::fill(out.begin(), out.end(), 0.0);
  std::size_t pos = 0;
  for (const auto& range : numeric_) {
    const auto v = numeric_value(r, range.name);
    double x = 0.0;
    if (v && range.max > range.min) x = std::clamp((*v - range.min) / (range.max - range.min), 0.0, 1.0);
    out[pos++] = x;
  }
  for (std::size_t i = 0; i < vocabularies_.size(); ++i) {
    const auto& vocab = vocabularies_[i];
    const auto& lk = lookup_[i];
    const std::string token = category_token(r, vocab.name);
    auto it = lk.find(token);
    if (it == lk.end() && is_port_feature(vocab.name) && token != port_bucket::kAbsent) {
      const auto port = static_cast<std::uint16_t>(std::stoul(token));
      it = lk.find(bucket_for_port(port));
    }
    if (it == lk.end()) it = lk.find(kOtherCategory);
    out[pos + it->second] = 1.0;
    pos += vocab.categories.size();
  }
}

Eigen::VectorXd Encoder::encode(const FlowRecord& r) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(width_));
  encode_into(r, std::span<double>(v.data(), width_));
  return v;
}

Eigen::MatrixXd Encoder::encode_all(std::span<const FlowRecord> records) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(width_), static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    encode_into(records[i], std::span<double>(m.col(static_cast<Eigen::Index>(i)).data(), width_));
  return m;
}

nlohmann::json Encoder::to_json() const {
  nlohmann::json j;
  j["spec"] = spec_.to_json();
  j["numeric"] = nlohmann::json::array();
  for (const auto& r : numeric_) j["numeric"].push_back({{"name", r.name}, {"min", r.min}, {"max", r.max}});
  j["vocabularies"] = nlohmann::json::array();
  for (const auto& v : vocabularies_)
    j["vocabularies"].push_back({{"name", v.name}, {"categories", v.categories}});
  j["output_width"] = width_;
  return j;
}

Encoder Encoder::from_json(const nlohmann::json& j) {
  try {
    auto spec = FeatureSpec::from_json(j.at("spec"));
    std::vector<NumericRange> numeric;
    for (const auto& r : j.at("numeric"))
      numeric.push_back({r.at("name").get<std::string>(), r.at("min").get<double>(), r.at("max").get<double>()});
    std::vector<Vocabulary> vocabs;
    for (const auto& v : j.at("vocabularies"))
      vocabs.push_back({v.at("name").get<std::string>(), v.at("categories").get<std::vector<std::string>>()});
    Encoder e(std::move(spec), std::move(numeric), std::move(vocabs));
    if (j.contains("output_width") && j.at("output_width").get<std::size_t>() != e.output_width())
      throw DataError("encoder file output_width disagrees with its vocabularies");
    return e;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("encoder file: ") + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t Encoder::hash() const { return fnv1a64(to_json().dump()); }

Encoder fit_encoder(std::span<const FlowRecord> train, const FeatureSpec& spec) {
  const std::vector<FlowRecord> copy(train.begin(), train.end());
  const std::vector<std::vector<FlowRecord>> sets{copy};
  return fit_encoder(std::span<const std::vector<FlowRecord>>(sets), spec);
}

Encoder fit_encoder(std::span<const std::vector<FlowRecord>> train_sets, const FeatureSpec& spec) {
  spec.validate();
  std::size_t total = 0;
  for (const auto& s : train_sets) total += s.size();
  if (total == 0) throw DataError("cannot fit an encoder on an empty training set");

  std::vector<NumericRange> numeric;
  for (const auto& name : spec.numeric) {
    NumericRange range{name, 0.0, 0.0};
    bool any = false;
    for (const auto& set : train_sets)
      for (const auto& r : set) {
        const auto v = numeric_value(r, name);
        if (!v) continue;
        if (!any) {
          range.min = range.max = *v;
          any = true;
        } else {
          range.min = std::min(range.min, *v);
          range.max = std::max(range.max, *v);
        }
      }
    numeric.push_back(range);
  }

  std::vector<Vocabulary> vocabs;
  for (const auto& name : spec.categorical) {
    Vocabulary v{name, {}};
    if (is_port_feature(name)) {
      std::map<std::uint16_t, std::size_t> counts;
      for (const auto& set : train_sets)
        for (const auto& r : set) {
          const auto& p = name == "src_port" ? r.src_port : r.dst_port;
          if (p) ++counts[*p];
        }
      auto ranked = by_frequency(counts);
      if (ranked.size() > spec.port_top_k) ranked.resize(spec.port_top_k);
      for (auto p : ranked) v.categories.push_back(std::to_string(p));
      for (auto b : {port_bucket::kWellKnown, port_bucket::kRegistered, port_bucket::kEphemeral,
                     port_bucket::kAbsent})
        v.categories.emplace_back(b);
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& set : train_sets)
        for (const auto& r : set) ++counts[category_token(r, name)];
      counts.erase(kOtherCategory);
      v.categories = by_frequency(counts);
    }
    v.categories.emplace_back(kOtherCategory);
    vocabs.push_back(std::move(v));
  }
  return Encoder(spec, std::move(numeric), std::move(vocabs));
}

void save_encoder(const std::string& path, const Encoder& encoder) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write encoder file '" + path + "'");
  out << encoder.to_json().dump(2) << '\n';
}

Encoder load_encoder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open encoder file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("encoder file '" + path + "': " + e.what());
  }
  return Encoder::from_json(j);
}

}  // namespace flowseq
