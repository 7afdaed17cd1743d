#include "flowseq/flow.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "flowseq/error.hpp"

namespace flowseq {

namespace {

constexpr std::array<std::string_view, 15> kCanonicalFields = {
    "timestamp",   "duration",  "protocol", "src_port", "dst_port",
    "direction",   "total_packets", "total_bytes", "src_bytes", "iat_min",
    "iat_max",     "iat_avg",   "src_host", "dst_host", "label"};

constexpr std::string_view kCanonicalBenign = "benign";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Splits one line on `delim`, honouring double quotes ("" escapes a quote).
std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_count(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && p == s.data() + s.size()) return v;
  // Some exporters write counters as "900.0".
  auto d = parse_real(s);
  if (d && *d >= 0.0 && *d == std::floor(*d) && *d < 1.8e19) return static_cast<std::uint64_t>(*d);
  return std::nullopt;
}

// Absent port: empty or "-". Hex ports ("0x0050") appear in some Argus exports.
struct PortParse {
  bool ok = false;
  std::optional<std::uint16_t> port;
};

PortParse parse_port(std::string_view s) {
  s = trim(s);
  if (s.empty() || s == "-") return {true, std::nullopt};
  std::uint64_t v = 0;
  std::errc ec{};
  const char* end = s.data() + s.size();
  const char* p = nullptr;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    auto r = std::from_chars(s.data() + 2, end, v, 16);
    ec = r.ec;
    p = r.ptr;
  } else {
    auto r = std::from_chars(s.data(), end, v);
    ec = r.ec;
    p = r.ptr;
  }
  if (ec != std::errc{} || p != end || v > 65535) return {};
  return {true, static_cast<std::uint16_t>(v)};
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// YYYY-MM-DD[ T]HH:MM:SS[.frac][Z], '/' also accepted as date separator. No offsets.
std::optional<double> parse_iso8601(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() < 19) return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc{} || p != s.data() + pos + len) return std::nullopt;
    return v;
  };
  if ((s[4] != '-' && s[4] != '/') || s[7] != s[4] || (s[10] != ' ' && s[10] != 'T') ||
      s[13] != ':' || s[16] != ':')
    return std::nullopt;
  auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), h = num(11, 2), mi = num(14, 2),
       sec = num(17, 2);
  if (!y || !mo || !d || !h || !mi || !sec) return std::nullopt;
  if (*mo < 1 || *mo > 12 || *d < 1 || *d > 31 || *h > 23 || *mi > 59 || *sec > 60)
    return std::nullopt;
  double frac = 0.0;
  if (s.size() > 19) {
    if (s[19] != '.') return std::nullopt;
    std::string f = "0";
    f.append(s.substr(19));
    auto fv = parse_real(f);
    if (!fv) return std::nullopt;
    frac = *fv;
  }
  const auto days = days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d));
  return static_cast<double>(days) * 86400.0 + *h * 3600.0 + *mi * 60.0 + *sec + frac;
}

std::string quote_if_needed(const std::string& s, char delim) {
  if (s.find(delim) == std::string::npos && s.find('"') == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Inbound: return "inbound";
    case Direction::Outbound: return "outbound";
    case Direction::Bidirectional: return "bidirectional";
  }
  return "bidirectional";
}

std::optional<Direction> parse_direction(std::string_view token) {
  const std::string t = lower(trim(token));
  if (t == "in" || t == "inbound" || t == "<-" || t == "<?") return Direction::Inbound;
  if (t == "out" || t == "outbound" || t == "->" || t == "?>") return Direction::Outbound;
  if (t == "bi" || t == "bidirectional" || t == "both" || t == "<->" || t == "<?>" ||
      t == "who")
    return Direction::Bidirectional;
  return std::nullopt;
}

std::string_view to_string(SchemaStyle s) {
  return s == SchemaStyle::Ctu13 ? "ctu13" : "cicids";
}

SchemaStyle parse_schema_style(std::string_view token) {
  const std::string t = lower(trim(token));
  if (t == "ctu13" || t == "ctu13-style") return SchemaStyle::Ctu13;
  if (t == "cicids" || t == "cicids2017" || t == "cicids-style") return SchemaStyle::Cicids;
  throw ConfigError("unknown schema style '" + std::string(token) + "'");
}

Label Label::malicious(std::string attack_type) {
  if (attack_type.empty()) throw DataError("malicious label needs a non-empty attack type");
  Label l;
  l.attack_type_ = std::move(attack_type);
  return l;
}

std::optional<std::string> check_invariants(const FlowRecord& r) {
  if (!std::isfinite(r.timestamp)) return "non-finite timestamp";
  if (!(r.duration >= 0.0)) return "negative duration";
  if (r.src_bytes > r.total_bytes) return "src_bytes exceeds total_bytes";
  for (const auto* v : {&r.iat_min, &r.iat_max, &r.iat_avg})
    if (v->has_value() && !(**v >= 0.0)) return "negative inter-arrival time";
  if (r.iat_min && r.iat_max && r.iat_avg &&
      !(*r.iat_min <= *r.iat_avg && *r.iat_avg <= *r.iat_max))
    return "inter-arrival times violate min <= avg <= max";
  return std::nullopt;
}

std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
  std::uint32_t addr = 0;
  int parts = 0;
  while (parts < 4) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || v > 255 || p == s.data()) return std::nullopt;
    addr = (addr << 8) | v;
    ++parts;
    s.remove_prefix(static_cast<std::size_t>(p - s.data()));
    if (parts < 4) {
      if (s.empty() || s.front() != '.') return std::nullopt;
      s.remove_prefix(1);
    }
  }
  if (!s.empty()) return std::nullopt;
  return addr;
}

HostSet::HostSet(std::vector<std::string> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (auto slash = e.find('/'); slash != std::string::npos) {
      auto net = parse_ipv4(std::string_view(e).substr(0, slash));
      unsigned bits = 0;
      auto tail = std::string_view(e).substr(slash + 1);
      auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), bits);
      if (!net || ec != std::errc{} || p != tail.data() + tail.size() || bits > 32)
        throw ConfigError("bad CIDR host entry '" + e + "'");
      const std::uint32_t mask = bits == 0 ? 0u : ~std::uint32_t{0} << (32 - bits);
      cidrs_.push_back({*net & mask, mask});
    } else if (!e.empty() && e.back() == '*') {
      prefixes_.push_back(e.substr(0, e.size() - 1));
    } else if (!e.empty() && e.back() == '.') {
      prefixes_.push_back(e);
    } else {
      exact_.push_back(e);
    }
  }
  std::sort(exact_.begin(), exact_.end());
}

bool HostSet::contains(std::string_view host) const {
  if (std::binary_search(exact_.begin(), exact_.end(), host)) return true;
  for (const auto& p : prefixes_)
    if (host.substr(0, p.size()) == p) return true;
  if (!cidrs_.empty()) {
    if (auto ip = parse_ipv4(host)) {
      for (const auto& c : cidrs_)
        if ((*ip & c.mask) == c.network) return true;
    }
  }
  return false;
}

FlowSchema FlowSchema::canonical(SchemaStyle style) {
  FlowSchema s;
  s.style = style;
  for (auto f : kCanonicalFields) s.columns.emplace(std::string(f), std::string(f));
  s.benign_labels = {std::string(kCanonicalBenign)};
  return s;
}

FlowSchema FlowSchema::from_json(const nlohmann::json& j) {
  FlowSchema s;
  try {
    if (j.contains("style")) s.style = parse_schema_style(j.at("style").get<std::string>());
    if (j.contains("delimiter")) {
      auto d = j.at("delimiter").get<std::string>();
      if (d == "\\t" || d == "tab") d = "\t";
      if (d.size() != 1) throw ConfigError("schema delimiter must be a single character");
      s.delimiter = d[0];
    }
    if (j.contains("timestamp_format")) {
      const auto f = lower(j.at("timestamp_format").get<std::string>());
      if (f == "seconds") s.timestamp_format = TimestampFormat::Seconds;
      else if (f == "iso8601") s.timestamp_format = TimestampFormat::Iso8601;
      else throw ConfigError("unknown timestamp_format '" + f + "'");
    }
    if (j.contains("epoch")) s.epoch = j.at("epoch").get<double>();
    if (j.contains("columns")) s.columns = j.at("columns").get<std::map<std::string, std::string>>();
    if (j.contains("malicious_labels"))
      s.malicious_labels = j.at("malicious_labels").get<std::vector<std::string>>();
    if (j.contains("benign_labels"))
      s.benign_labels = j.at("benign_labels").get<std::vector<std::string>>();
    if (j.contains("internal_hosts"))
      s.internal_hosts = HostSet(j.at("internal_hosts").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  for (const auto& [field, _] : s.columns)
    if (std::find(kCanonicalFields.begin(), kCanonicalFields.end(), field) ==
        kCanonicalFields.end())
      throw ConfigError("schema maps unknown field '" + field + "'");
  return s;
}

nlohmann::json FlowSchema::to_json() const {
  nlohmann::json j;
  j["style"] = std::string(to_string(style));
  j["delimiter"] = std::string(1, delimiter);
  j["timestamp_format"] = timestamp_format == TimestampFormat::Seconds ? "seconds" : "iso8601";
  j["epoch"] = epoch;
  j["columns"] = columns;
  j["malicious_labels"] = malicious_labels;
  j["benign_labels"] = benign_labels;
  j["internal_hosts"] = internal_hosts.entries();
  return j;
}

std::string format_rejection(const Rejection& r) {
  return "line " + std::to_string(r.line) + ": " + r.reason;
}

ParseResult parse_flows(std::istream& in, const FlowSchema& schema, std::string source_name) {
  if (schema.malicious_labels.empty() && schema.benign_labels.empty())
    throw ConfigError("schema error: no label vocabulary declared");

  std::vector<std::string> required = {"timestamp", "duration",    "protocol",
                                       "total_packets", "total_bytes", "label"};
  if (schema.style == SchemaStyle::Ctu13) required.push_back("src_bytes");
  if (schema.style == SchemaStyle::Cicids)
    for (auto f : {"iat_min", "iat_max", "iat_avg"}) required.emplace_back(f);
  for (const auto& f : required)
    if (!schema.columns.count(f)) throw ConfigError("schema error: missing mandatory column '" + f + "'");
  const bool derive_direction = !schema.columns.count("direction");
  if (derive_direction &&
      (!schema.columns.count("src_host") || !schema.columns.count("dst_host") ||
       schema.internal_hosts.empty()))
    throw ConfigError(
        "schema error: no direction column and no src_host/dst_host + internal_hosts to derive it");

  ParseResult result;
  result.dataset.style = schema.style;
  result.dataset.source_name = std::move(source_name);

  std::string line;
  std::size_t line_no = 0;
  // Skip leading blank lines; the first non-blank line is the header.
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) {
      header = split_fields(line, schema.delimiter);
      break;
    }
  }
  if (header.empty()) return result;

  std::map<std::string, std::size_t> index;  // field -> column index
  for (const auto& [field, column] : schema.columns) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return trim(h) == column; });
    if (it == header.end())
      throw ConfigError("schema error: column '" + column + "' (field " + field +
                        ") not in header");
    index[field] = static_cast<std::size_t>(it - header.begin());
  }
  auto col = [&](const std::vector<std::string>& row, const char* field) -> std::string_view {
    auto it = index.find(field);
    if (it == index.end()) return {};
    return row[it->second];
  };

  std::vector<FlowRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto row = split_fields(line, schema.delimiter);
    auto reject = [&](std::string reason) {
      result.rejections.push_back({line_no, std::move(reason)});
    };
    if (row.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " +
             std::to_string(row.size()));
      continue;
    }
    FlowRecord r;
    const auto ts_text = col(row, "timestamp");
    std::optional<double> ts = schema.timestamp_format == TimestampFormat::Seconds
                                   ? parse_real(ts_text)
                                   : parse_iso8601(ts_text);
    if (!ts) { reject("unparseable timestamp '" + std::string(trim(ts_text)) + "'"); continue; }
    r.timestamp = *ts - schema.epoch;

    auto dur = parse_real(col(row, "duration"));
    if (!dur) { reject("unparseable duration"); continue; }
    r.duration = *dur;
    if (r.duration < 0.0) { reject("negative duration"); continue; }

    r.protocol = lower(trim(col(row, "protocol")));
    if (r.protocol.empty()) { reject("empty protocol"); continue; }

    auto sp = parse_port(col(row, "src_port"));
    auto dp = parse_port(col(row, "dst_port"));
    if (!sp.ok || !dp.ok) { reject("port not an integer in [0, 65535]"); continue; }
    r.src_port = sp.port;
    r.dst_port = dp.port;

    r.src_host = std::string(trim(col(row, "src_host")));
    r.dst_host = std::string(trim(col(row, "dst_host")));
    if (derive_direction) {
      r.direction = classify_direction(r.src_host, r.dst_host, schema.internal_hosts);
    } else {
      auto d = parse_direction(col(row, "direction"));
      if (!d) { reject("unknown direction '" + std::string(trim(col(row, "direction"))) + "'"); continue; }
      r.direction = *d;
    }

    auto pk = parse_count(col(row, "total_packets"));
    auto by = parse_count(col(row, "total_bytes"));
    if (!pk || !by) { reject("unparseable packet/byte count"); continue; }
    r.total_packets = *pk;
    r.total_bytes = *by;
    if (index.count("src_bytes")) {
      auto sb = parse_count(col(row, "src_bytes"));
      if (!sb) { reject("unparseable src_bytes"); continue; }
      r.src_bytes = *sb;
    }

    bool iat_ok = true;
    for (auto [field, slot] : {std::pair{"iat_min", &r.iat_min}, std::pair{"iat_max", &r.iat_max},
                               std::pair{"iat_avg", &r.iat_avg}}) {
      if (!index.count(field)) continue;
      auto text = trim(col(row, field));
      if (text.empty() || text == "-") {
        if (schema.style == SchemaStyle::Cicids) iat_ok = false;
        continue;
      }
      auto v = parse_real(text);
      if (!v) { iat_ok = false; continue; }
      *slot = *v;
    }
    if (!iat_ok) { reject("missing or unparseable inter-arrival time"); continue; }

    const std::string raw_label(trim(col(row, "label")));
    const bool mal = contains(schema.malicious_labels, raw_label);
    const bool ben = contains(schema.benign_labels, raw_label);
    if (mal) {
      r.label = Label::malicious(raw_label);
    } else if (ben) {
      r.label = Label::benign();
    } else if (schema.benign_labels.empty()) {
      r.label = Label::benign();
    } else if (schema.malicious_labels.empty()) {
      if (raw_label.empty()) { reject("empty label"); continue; }
      r.label = Label::malicious(raw_label);
    } else {
      reject("label '" + raw_label + "' in neither vocabulary");
      continue;
    }

    if (auto bad = check_invariants(r)) { reject(*bad); continue; }
    records.push_back(std::move(r));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const FlowRecord& a, const FlowRecord& b) { return a.timestamp < b.timestamp; });
  result.dataset.records = std::move(records);
  return result;
}

ParseResult parse_flows_file(const std::string& path, const FlowSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open flow file '" + path + "'");
  return parse_flows(in, schema, path);
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

void write_flows(std::ostream& out, const FlowDataset& dataset) {
  const char d = ',';
  for (std::size_t i = 0; i < kCanonicalFields.size(); ++i) {
    if (i) out << d;
    out << kCanonicalFields[i];
  }
  out << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  auto port = [](const std::optional<std::uint16_t>& p) {
    return p ? std::to_string(*p) : std::string();
  };
  for (const auto& r : dataset.records) {
    out << format_double(r.timestamp) << d << format_double(r.duration) << d
        << quote_if_needed(r.protocol, d) << d << port(r.src_port) << d << port(r.dst_port) << d
        << to_string(r.direction) << d << r.total_packets << d << r.total_bytes << d
        << r.src_bytes << d << opt(r.iat_min) << d << opt(r.iat_max) << d << opt(r.iat_avg) << d
        << quote_if_needed(r.src_host, d) << d << quote_if_needed(r.dst_host, d) << d
        << quote_if_needed(r.label.is_malicious() ? r.label.attack_type()
                                                  : std::string(kCanonicalBenign),
                           d)
        << '\n';
  }
}

void write_flows_file(const std::string& path, const FlowDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write flow file '" + path + "'");
  write_flows(out, dataset);
}

Direction classify_direction(std::string_view src_host, std::string_view dst_host,
                             const HostSet& internal) {
  const bool src_in = internal.contains(src_host);
  const bool dst_in = internal.contains(dst_host);
  if (src_in && !dst_in) return Direction::Outbound;
  if (!src_in && dst_in) return Direction::Inbound;
  return Direction::Bidirectional;
}

FlowDataset filter_hosts(const FlowDataset& dataset, const HostSet& excluded) {
  FlowDataset out;
  out.style = dataset.style;
  out.source_name = dataset.source_name;
  if (excluded.empty()) {
    out.records = dataset.records;
    return out;
  }
  out.records.reserve(dataset.records.size());
  std::copy_if(dataset.records.begin(), dataset.records.end(), std::back_inserter(out.records),
               [&](const FlowRecord& r) {
                 return !excluded.contains(r.src_host) && !excluded.contains(r.dst_host);
               });
  return out;
}

}  // namespace flowseq
