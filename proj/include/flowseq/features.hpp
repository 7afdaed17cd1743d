#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flowseq/flow.hpp"

namespace flowseq {

// Ratio features computed from a record's counters. Zero denominators give 0.
struct DerivedFeatures {
  double packets_per_sec = 0.0;
  double bytes_per_sec = 0.0;
  double bytes_per_packet = 0.0;
};

DerivedFeatures derive_numeric(const FlowRecord& r);

// Raw value of a named numeric feature; nullopt when the record lacks it
// (inter-arrival times on ctu13-style records). Throws ConfigError on unknown names.
std::optional<double> numeric_value(const FlowRecord& r, std::string_view name);

// Category token of a named categorical feature before vocabulary lookup.
std::string category_token(const FlowRecord& r, std::string_view name);

struct FeatureSpec {
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;  // protocol, direction, src_port, dst_port
  std::size_t port_top_k = 64;

  static FeatureSpec ctu13();
  static FeatureSpec cicids();
  static FeatureSpec for_style(SchemaStyle style);
  static FeatureSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

namespace port_bucket {
inline constexpr const char* kWellKnown = "well-known";
inline constexpr const char* kRegistered = "registered";
inline constexpr const char* kEphemeral = "ephemeral";
inline constexpr const char* kAbsent = "absent";
}  // namespace port_bucket

inline constexpr const char* kOtherCategory = "other";

struct NumericRange {
  std::string name;
  double min = 0.0;
  double max = 0.0;
};

struct Vocabulary {
  std::string name;
  std::vector<std::string> categories;  // ends with "other"

  std::size_t index_of(const std::string& token) const;
};

// Fitted feature transformation. Immutable after fit_encoder().
class Encoder {
 public:
  Encoder() = default;
  Encoder(FeatureSpec spec, std::vector<NumericRange> numeric, std::vector<Vocabulary> vocabularies);

  const FeatureSpec& spec() const noexcept { return spec_; }
  const std::vector<NumericRange>& numeric() const noexcept { return numeric_; }
  const std::vector<Vocabulary>& vocabularies() const noexcept { return vocabularies_; }
  std::size_t output_width() const noexcept { return width_; }

  // Writes one feature vector into `out` (size output_width()).
  void encode_into(const FlowRecord& r, std::span<double> out) const;
  Eigen::VectorXd encode(const FlowRecord& r) const;
  // One column per record.
  Eigen::MatrixXd encode_all(std::span<const FlowRecord> records) const;

  nlohmann::json to_json() const;
  static Encoder from_json(const nlohmann::json& j);
  // FNV-1a over the serialized form; stamped into checkpoints.
  std::uint64_t hash() const;

  bool operator==(const Encoder& other) const { return to_json() == other.to_json(); }

 private:
  std::vector<std::map<std::string, std::size_t>> build_lookup() const;

  FeatureSpec spec_;
  std::vector<NumericRange> numeric_;
  std::vector<Vocabulary> vocabularies_;
  std::vector<std::map<std::string, std::size_t>> lookup_;
  std::size_t width_ = 0;
};

// Fits min/max and vocabularies on training records only. Throws DataError on an
// empty training set.
Encoder fit_encoder(std::span<const FlowRecord> train, const FeatureSpec& spec);
Encoder fit_encoder(std::span<const std::vector<FlowRecord>> train_sets, const FeatureSpec& spec);

std::string bucket_for_port(std::uint16_t port);

void save_encoder(const std::string& path, const Encoder& encoder);
Encoder load_encoder(const std::string& path);

std::string hex64(std::uint64_t v);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace flowseq
