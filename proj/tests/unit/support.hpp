#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "flowseq/flow.hpp"

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(FLOWSEQ_FIXTURES) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Fresh directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("flowseq-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Random valid record; timestamps are left to the caller.
inline flowseq::FlowRecord random_record(std::mt19937_64& rng, flowseq::SchemaStyle style) {
  using namespace flowseq;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> port(0, 65535);
  FlowRecord r;
  r.duration = u(rng) < 0.1 ? 0.0 : u(rng) * 100.0;
  const char* protos[] = {"tcp", "udp", "icmp", "gre"};
  r.protocol = protos[rng() % 4];
  if (r.protocol != "icmp") {
    r.src_port = static_cast<std::uint16_t>(port(rng));
    r.dst_port = static_cast<std::uint16_t>(port(rng));
  }
  r.direction = static_cast<Direction>(rng() % 3);
  r.total_packets = rng() % 1000;
  r.total_bytes = rng() % 1000000;
  r.src_bytes = r.total_bytes == 0 ? 0 : rng() % (r.total_bytes + 1);
  if (style == SchemaStyle::Cicids) {
    const double a = u(rng), b = u(rng), c = u(rng);
    double lo = std::min({a, b, c}), hi = std::max({a, b, c});
    r.iat_min = lo;
    r.iat_max = hi;
    r.iat_avg = a + b + c - lo - hi;
  }
  r.src_host = "10.0.0." + std::to_string(rng() % 8);
  r.dst_host = "192.168.1." + std::to_string(rng() % 8);
  r.label = u(rng) < 0.3 ? Label::malicious(u(rng) < 0.5 ? "botnet" : "scan") : Label::benign();
  return r;
}

}  // namespace testing
