#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "flowseq/error.hpp"
#include "flowseq/flow.hpp"
#include "support.hpp"

using namespace flowseq;

namespace {

FlowSchema ten_column_schema() {
  FlowSchema s;
  s.style = SchemaStyle::Ctu13;
  for (const char* f : {"timestamp", "duration", "protocol", "src_port", "dst_port", "direction", "total_packets",
                        "total_bytes", "src_bytes", "label"})
    s.columns[f] = f;
  s.malicious_labels = {"botnet"};
  return s;
}

const char* kHeader = "timestamp,duration,protocol,src_port,dst_port,direction,total_packets,total_bytes,src_bytes,label\n";

}  // namespace

TEST_CASE("parse maps a row onto the declared fields") {
  std::istringstream in(std::string(kHeader) + "1.5,0.2,tcp,4444,80,out,10,900,500,botnet\n");
  const auto res = parse_flows(in, ten_column_schema());
  REQUIRE(res.dataset.size() == 1);
  CHECK(res.rejections.empty());
  const auto& r = res.dataset.records[0];
  CHECK(r.timestamp == 1.5);
  CHECK(r.duration == 0.2);
  CHECK(r.protocol == "tcp");
  CHECK(r.src_port == std::optional<std::uint16_t>(4444));
  CHECK(r.dst_port == std::optional<std::uint16_t>(80));
  CHECK(r.direction == Direction::Outbound);
  CHECK(r.total_packets == 10);
  CHECK(r.total_bytes == 900);
  CHECK(r.src_bytes == 500);
  CHECK(r.label == Label::malicious("botnet"));
}

TEST_CASE("negative duration rejects the row with its line number") {
  std::istringstream in(std::string(kHeader) + "1,0.2,tcp,1,2,out,1,10,5,x\n2,-1,tcp,1,2,out,1,10,5,x\n");
  const auto res = parse_flows(in, ten_column_schema());
  CHECK(res.dataset.size() == 1);
  REQUIRE(res.rejections.size() == 1);
  CHECK(res.rejections[0].line == 3);
  CHECK(format_rejection(res.rejections[0]).rfind("line 3: ", 0) == 0);
}

TEST_CASE("other row-level rejections") {
  std::istringstream in(std::string(kHeader) +
                        "abc,0.2,tcp,1,2,out,1,10,5,x\n"
                        "1,0.2,tcp,70000,2,out,1,10,5,x\n"
                        "1,0.2,tcp,1,2,out,1,10,50,x\n"
                        "1,0.2,tcp,1,2,sideways,1,10,5,x\n"
                        "1,0.2,tcp,1,2,out,1,10,5\n");
  const auto res = parse_flows(in, ten_column_schema());
  CHECK(res.dataset.empty());
  CHECK(res.rejections.size() == 5);
}

TEST_CASE("empty input gives an empty dataset") {
  std::istringstream in("");
  const auto res = parse_flows(in, ten_column_schema());
  CHECK(res.dataset.empty());
  CHECK(res.rejections.empty());
}

TEST_CASE("missing mandatory column is a schema error") {
  auto s = ten_column_schema();
  s.columns.erase("total_bytes");
  std::istringstream in(kHeader);
  CHECK_THROWS_AS(parse_flows(in, s), ConfigError);

  std::istringstream in2("timestamp,duration\n1,2\n");
  CHECK_THROWS_AS(parse_flows(in2, ten_column_schema()), ConfigError);
}

TEST_CASE("records come back sorted, stable on ties") {
  std::istringstream in(std::string(kHeader) +
                        "5,0,tcp,1,1,out,1,1,1,a\n"
                        "1,0,tcp,1,2,out,1,1,1,a\n"
                        "5,0,tcp,1,3,out,1,1,1,a\n"
                        "3,0,tcp,1,4,out,1,1,1,a\n");
  const auto d = parse_flows(in, ten_column_schema()).dataset;
  REQUIRE(d.size() == 4);
  CHECK(d.records[0].dst_port == std::optional<std::uint16_t>(2));
  CHECK(d.records[1].dst_port == std::optional<std::uint16_t>(4));
  CHECK(d.records[2].dst_port == std::optional<std::uint16_t>(1));
  CHECK(d.records[3].dst_port == std::optional<std::uint16_t>(3));
}

TEST_CASE("label vocabularies") {
  auto s = ten_column_schema();
  std::istringstream in(std::string(kHeader) + "1,0,tcp,1,1,out,1,1,1,botnet\n2,0,tcp,1,1,out,1,1,1,whatever\n");
  const auto d = parse_flows(in, s).dataset;
  CHECK(d.records[0].label.is_malicious());
  CHECK_FALSE(d.records[1].label.is_malicious());

  s.malicious_labels.clear();
  s.benign_labels = {"normal"};
  std::istringstream in2(std::string(kHeader) + "1,0,tcp,1,1,out,1,1,1,normal\n2,0,tcp,1,1,out,1,1,1,dos\n");
  const auto d2 = parse_flows(in2, s).dataset;
  CHECK_FALSE(d2.records[0].label.is_malicious());
  CHECK(d2.records[1].label == Label::malicious("dos"));
}

TEST_CASE("canonical round trip over random datasets") {
  std::mt19937_64 rng(42);
  for (auto style : {SchemaStyle::Ctu13, SchemaStyle::Cicids}) {
    for (int trial = 0; trial < 20; ++trial) {
      FlowDataset d;
      d.style = style;
      std::uniform_real_distribution<double> gap(0.0, 3.0);
      double t = 1e9 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const int n = static_cast<int>(rng() % 60);
      for (int i = 0; i < n; ++i) {
        auto r = testing::random_record(rng, style);
        t += gap(rng) < 0.5 ? 0.0 : gap(rng);
        r.timestamp = t;
        d.records.push_back(std::move(r));
      }
      std::ostringstream out;
      write_flows(out, d);
      std::istringstream in(out.str());
      const auto back = parse_flows(in, FlowSchema::canonical(style));
      CHECK(back.rejections.empty());
      CHECK(back.dataset.records == d.records);
    }
  }
}

TEST_CASE("parsing is deterministic") {
  const auto text = testing::slurp(testing::fixture("botnet_window_flows.csv"));
  std::istringstream a(text), b(text);
  auto s = ten_column_schema();
  s.malicious_labels = {"botnet", "sql-injection"};
  CHECK(parse_flows(a, s).dataset == parse_flows(b, s).dataset);
}

TEST_CASE("classify_direction covers the four combinations") {
  const HostSet internal({"10.0.0.0/8", "lab-"});
  CHECK(classify_direction("10.1.2.3", "8.8.8.8", internal) == Direction::Outbound);
  CHECK(classify_direction("8.8.8.8", "10.1.2.3", internal) == Direction::Inbound);
  CHECK(classify_direction("10.1.2.3", "10.9.9.9", internal) == Direction::Bidirectional);
  CHECK(classify_direction("8.8.8.8", "1.1.1.1", internal) == Direction::Bidirectional);
}

TEST_CASE("HostSet matching forms") {
  const HostSet h({"192.168.1.5", "172.16.", "web*", "10.0.0.0/24"});
  CHECK(h.contains("192.168.1.5"));
  CHECK_FALSE(h.contains("192.168.1.50"));
  CHECK(h.contains("172.16.3.4"));
  CHECK(h.contains("web-01"));
  CHECK(h.contains("10.0.0.255"));
  CHECK_FALSE(h.contains("10.0.1.0"));
  CHECK_FALSE(HostSet().contains("x"));
}

TEST_CASE("direction tokens") {
  CHECK(parse_direction("->") == Direction::Outbound);
  CHECK(parse_direction("<-") == Direction::Inbound);
  CHECK(parse_direction("<->") == Direction::Bidirectional);
  CHECK(parse_direction("IN") == Direction::Inbound);
  CHECK_FALSE(parse_direction("up").has_value());
}

TEST_CASE("filter_hosts") {
  FlowDataset d;
  for (int i = 0; i < 5; ++i) {
    FlowRecord r;
    r.timestamp = i;
    r.src_host = i < 2 ? "H" : "A";
    r.dst_host = "B";
    d.records.push_back(r);
  }
  CHECK(filter_hosts(d, HostSet({"H"})).size() == 3);
  CHECK(filter_hosts(d, HostSet()) == d);

  // brute-force count oracle on random data, order and fields preserved
  std::mt19937_64 rng(7);
  FlowDataset g;
  for (int i = 0; i < 500; ++i) {
    auto r = testing::random_record(rng, SchemaStyle::Ctu13);
    r.timestamp = i;
    g.records.push_back(r);
  }
  const HostSet ex({"10.0.0.3", "192.168.1.1"});
  std::vector<FlowRecord> expect;
  for (const auto& r : g.records)
    if (r.src_host != "10.0.0.3" && r.dst_host != "192.168.1.1" && r.src_host != "192.168.1.1" &&
        r.dst_host != "10.0.0.3")
      expect.push_back(r);
  CHECK(filter_hosts(g, ex).records == expect);
}

TEST_CASE("record invariants") {
  FlowRecord r;
  CHECK_FALSE(check_invariants(r).has_value());
  r.src_bytes = 5;
  CHECK(check_invariants(r).has_value());
  r.src_bytes = 0;
  r.iat_min = 2.0;
  r.iat_avg = 1.0;
  r.iat_max = 3.0;
  CHECK(check_invariants(r).has_value());
}

TEST_CASE("iso timestamps with epoch") {
  auto s = ten_column_schema();
  s.timestamp_format = TimestampFormat::Iso8601;
  s.epoch = 1000.0;
  std::istringstream in(std::string(kHeader) + "1970-01-01T00:20:00.5Z,0,tcp,1,1,out,1,1,1,a\n1250,0,tcp,1,1,out,1,1,1,a\n");
  const auto res = parse_flows(in, s);
  REQUIRE(res.dataset.size() == 1);
  CHECK(res.dataset.records[0].timestamp == doctest::Approx(200.5));
  CHECK(res.rejections.size() == 1);
}
