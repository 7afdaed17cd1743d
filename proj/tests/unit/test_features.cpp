#include <doctest.h>

#include <random>

#include "flowseq/error.hpp"
#include "flowseq/features.hpp"
#include "support.hpp"

using namespace flowseq;

namespace {

FlowRecord rec(double dur, std::uint64_t pk, std::uint64_t by, const std::string& proto = "tcp",
               std::optional<std::uint16_t> dport = 80) {
  FlowRecord r;
  r.duration = dur;
  r.total_packets = pk;
  r.total_bytes = by;
  r.protocol = proto;
  r.dst_port = dport;
  r.src_port = 40000;
  return r;
}

FeatureSpec small_spec() {
  FeatureSpec s;
  s.numeric = {"total_bytes"};
  s.categorical = {"protocol"};
  s.port_top_k = 4;
  return s;
}

}  // namespace

TEST_CASE("derived ratios") {
  auto d = derive_numeric(rec(2, 10, 900));
  CHECK(d.packets_per_sec == 5.0);
  CHECK(d.bytes_per_sec == 450.0);
  CHECK(d.bytes_per_packet == 90.0);
  d = derive_numeric(rec(0, 10, 900));
  CHECK(d.packets_per_sec == 0.0);
  CHECK(d.bytes_per_sec == 0.0);
  d = derive_numeric(rec(1, 0, 0));
  CHECK(d.bytes_per_packet == 0.0);
}

TEST_CASE("port vocabulary with top_k 1") {
  FeatureSpec s;
  s.numeric = {};
  s.categorical = {"dst_port"};
  s.port_top_k = 1;
  std::vector<FlowRecord> train(5, rec(1, 1, 1));
  const auto e = fit_encoder(train, s);
  REQUIRE(e.vocabularies().size() == 1);
  const std::vector<std::string> want = {"80", "well-known", "registered", "ephemeral", "absent", "other"};
  CHECK(e.vocabularies()[0].categories == want);
  CHECK(e.output_width() == 6);

  // unseen ports fall into their range bucket, missing ports into "absent"
  auto v = e.encode(rec(1, 1, 1, "tcp", 8080));
  CHECK(v[2] == 1.0);
  v = e.encode(rec(1, 1, 1, "icmp", std::nullopt));
  CHECK(v[4] == 1.0);
  CHECK(v.sum() == 1.0);
}

TEST_CASE("degenerate and clamped numeric ranges") {
  std::vector<FlowRecord> train = {rec(1, 1, 500), rec(1, 1, 500)};
  auto e = fit_encoder(train, small_spec());
  CHECK(e.numeric()[0].min == 500.0);
  CHECK(e.numeric()[0].max == 500.0);
  CHECK(e.encode(rec(1, 1, 500))[0] == 0.0);

  train = {rec(1, 1, 100), rec(1, 1, 300)};
  e = fit_encoder(train, small_spec());
  CHECK(e.encode(rec(1, 1, 100))[0] == 0.0);
  CHECK(e.encode(rec(1, 1, 300))[0] == 1.0);
  CHECK(e.encode(rec(1, 1, 200))[0] == doctest::Approx(0.5));
  CHECK(e.encode(rec(1, 1, 9000))[0] == 1.0);
  CHECK(e.encode(rec(1, 1, 0))[0] == 0.0);
}

TEST_CASE("protocol one-hot and unseen category") {
  std::vector<FlowRecord> train = {rec(1, 1, 1, "tcp"), rec(1, 1, 1, "tcp"), rec(1, 1, 1, "udp"),
                                   rec(1, 1, 1, "icmp")};
  const auto e = fit_encoder(train, small_spec());
  const std::vector<std::string> want = {"tcp", "icmp", "udp", "other"};
  CHECK(e.vocabularies()[0].categories == want);
  auto v = e.encode(rec(1, 1, 1, "tcp"));
  CHECK(v.tail(4) == Eigen::Vector4d(1, 0, 0, 0));
  v = e.encode(rec(1, 1, 1, "gre"));
  CHECK(v.tail(4) == Eigen::Vector4d(0, 0, 0, 1));
}

TEST_CASE("empty training set") {
  std::vector<FlowRecord> none;
  CHECK_THROWS_AS(fit_encoder(none, small_spec()), DataError);
}

TEST_CASE("encoder invariants on random data") {
  std::mt19937_64 rng(17);
  for (auto style : {SchemaStyle::Ctu13, SchemaStyle::Cicids}) {
    std::vector<FlowRecord> train, test;
    for (int i = 0; i < 300; ++i) train.push_back(testing::random_record(rng, style));
    for (int i = 0; i < 100; ++i) test.push_back(testing::random_record(rng, style));
    const auto spec = FeatureSpec::for_style(style);
    const auto e = fit_encoder(train, spec);
    std::size_t width = e.numeric().size();
    for (const auto& v : e.vocabularies()) {
      CHECK_FALSE(v.categories.empty());
      width += v.categories.size();
    }
    CHECK(e.output_width() == width);
    for (const auto& r : test) {
      const auto x = e.encode(r);
      CHECK(x.minCoeff() >= 0.0);
      CHECK(x.maxCoeff() <= 1.0);
      std::size_t off = e.numeric().size();
      for (const auto& v : e.vocabularies()) {
        const auto n = static_cast<Eigen::Index>(v.categories.size());
        CHECK(x.segment(static_cast<Eigen::Index>(off), n).sum() == 1.0);
        off += v.categories.size();
      }
    }
    // determinism and JSON round trip
    CHECK(fit_encoder(train, spec) == e);
    const auto back = Encoder::from_json(e.to_json());
    CHECK(back == e);
    CHECK(back.hash() == e.hash());
    CHECK(back.encode_all(test) == e.encode_all(test));
  }
}

TEST_CASE("feature spec validation") {
  FeatureSpec s = small_spec();
  s.numeric.push_back("total_bytes");
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(FeatureSpec::from_json(nlohmann::json{{"numeric", {"nonsense"}}}), ConfigError);
}

TEST_CASE("port buckets") {
  CHECK(bucket_for_port(80) == "well-known");
  CHECK(bucket_for_port(1023) == "well-known");
  CHECK(bucket_for_port(1024) == "registered");
  CHECK(bucket_for_port(49151) == "registered");
  CHECK(bucket_for_port(49152) == "ephemeral");
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}
