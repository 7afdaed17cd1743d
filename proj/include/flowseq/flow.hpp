#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace flowseq {

enum class Direction { Inbound, Outbound, Bidirectional };

std::string_view to_string(Direction d);

// Accepts the long names, short names (in/out/bi) and the arrow notation used by
// Argus-style exporters ("->", "<-", "<->", and their "?" variants).
std::optional<Direction> parse_direction(std::string_view token);

// Which feature set a dataset carries. Cicids-style records must carry inter-arrival times.
enum class SchemaStyle { Ctu13, Cicids };

std::string_view to_string(SchemaStyle s);
SchemaStyle parse_schema_style(std::string_view token);

// Benign, or malicious with the attack type it belongs to.
class Label {
 public:
  Label() = default;
  static Label benign() { return Label{}; }
  static Label malicious(std::string attack_type);

  bool is_malicious() const noexcept { return !attack_type_.empty(); }
  // Empty for benign records.
  const std::string& attack_type() const noexcept { return attack_type_; }

  bool operator==(const Label&) const = default;

 private:
  std::string attack_type_;
};

struct FlowRecord {
  double timestamp = 0.0;  // seconds since the schema epoch
  double duration = 0.0;
  std::string protocol;  // lower-case token: tcp, udp, icmp, or whatever the exporter wrote
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;
  Direction direction = Direction::Bidirectional;
  std::uint64_t total_packets = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t src_bytes = 0;
  std::optional<double> iat_min;
  std::optional<double> iat_max;
  std::optional<double> iat_avg;
  std::string src_host;
  std::string dst_host;
  Label label;

  bool operator==(const FlowRecord&) const = default;
};

// Returns the violated invariant, if any.
std::optional<std::string> check_invariants(const FlowRecord& r);

struct FlowDataset {
  std::vector<FlowRecord> records;  // non-decreasing timestamps
  SchemaStyle style = SchemaStyle::Ctu13;
  std::string source_name;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  bool operator==(const FlowDataset&) const = default;
};

// Set of host identifiers. An entry matches a host when it is equal to it, when it
// ends in '.' or '*' and is a prefix of it, or when it is an IPv4 CIDR block
// containing it.
class HostSet {
 public:
  HostSet() = default;
  explicit HostSet(std::vector<std::string> entries);

  bool contains(std::string_view host) const;
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<std::string>& entries() const noexcept { return entries_; }

 private:
  struct Cidr {
    std::uint32_t network;
    std::uint32_t mask;
  };
  std::vector<std::string> entries_;
  std::vector<std::string> exact_;
  std::vector<std::string> prefixes_;
  std::vector<Cidr> cidrs_;
};

std::optional<std::uint32_t> parse_ipv4(std::string_view s);

enum class TimestampFormat { Seconds, Iso8601 };

// Column mapping for delimited flow exports. Keys of `columns` are FlowRecord field
// names; values are header names in the file.
struct FlowSchema {
  SchemaStyle style = SchemaStyle::Ctu13;
  char delimiter = ',';
  TimestampFormat timestamp_format = TimestampFormat::Seconds;
  double epoch = 0.0;  // subtracted from every parsed timestamp (unix seconds for ISO input)
  std::map<std::string, std::string> columns;
  std::vector<std::string> malicious_labels;
  std::vector<std::string> benign_labels;
  // Used to derive direction when the file has no direction column.
  HostSet internal_hosts;

  // The layout written by write_flows(): every field, header names equal to field names.
  static FlowSchema canonical(SchemaStyle style);
  static FlowSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Rejection {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

std::string format_rejection(const Rejection& r);

struct ParseResult {
  FlowDataset dataset;
  std::vector<Rejection> rejections;
};

// Throws ConfigError when the schema or header lacks a mandatory column.
ParseResult parse_flows(std::istream& in, const FlowSchema& schema,
                        std::string source_name = {});
ParseResult parse_flows_file(const std::string& path, const FlowSchema& schema);

// Writes the canonical layout. Doubles use shortest round-trip formatting, so
// parse_flows(write_flows(d), FlowSchema::canonical(d.style)) == d.
void write_flows(std::ostream& out, const FlowDataset& dataset);
void write_flows_file(const std::string& path, const FlowDataset& dataset);

Direction classify_direction(std::string_view src_host, std::string_view dst_host,
                             const HostSet& internal);

// Drops every record whose source or destination is in `excluded`.
FlowDataset filter_hosts(const FlowDataset& dataset, const HostSet& excluded);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace flowseq
