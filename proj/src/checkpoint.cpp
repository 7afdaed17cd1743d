#include "flowseq/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "flowseq/error.hpp"

namespace flowseq {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using nlohmann::json;

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  char b[8];
  if (!in.read(b, 8)) throw DataError("checkpoint truncated");
  std::uint64_t v;
  std::memcpy(&v, b, 8);
  return v;
}

template <class Net>
std::vector<std::vector<std::size_t>> block_shapes(const Net& net);

template <>
std::vector<std::vector<std::size_t>> block_shapes(const nn::FnnNet& net) {
  std::vector<std::vector<std::size_t>> s;
  auto dense = [&](const nn::DenseParams& d) {
    s.push_back({d.out(), d.in()});
    s.push_back({d.out(), 1});
  };
  for (const auto& l : net.hidden) dense(l);
  dense(net.out);
  return s;
}

template <>
std::vector<std::vector<std::size_t>> block_shapes(const nn::LstmNet& net) {
  std::vector<std::vector<std::size_t>> s;
  for (const auto& l : net.layers) {
    s.push_back({4 * l.hidden(), l.input()});
    s.push_back({4 * l.hidden(), l.hidden()});
    s.push_back({4 * l.hidden(), 1});
  }
  s.push_back({net.out.out(), net.out.in()});
  s.push_back({net.out.out(), 1});
  return s;
}

template <class Net>
void write_any(std::ostream& out, nn::ModelKind kind, const Net& net, const nn::TrainConfig& config,
               std::uint64_t encoder_hash) {
  json h{{"kind", nn::to_string(kind)},
         {"input_width", net.input_width()},
         {"hidden", net.hidden_sizes()},
         {"classes", net.out.out()},
         {"config", config.to_json()},
         {"seed", config.seed},
         {"encoder_hash", hex64(encoder_hash)},
         {"shapes", block_shapes(net)}};
  const std::string text = h.dump();
  out.write(kCheckpointMagic, 8);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (auto block : net.params())
    out.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)));
  if (!out) throw DataError("failed writing checkpoint");
}

std::uint64_t parse_hex(const std::string& s) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos, 16);
    if (pos != s.size()) throw DataError("bad encoder hash '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw DataError("bad encoder hash '" + s + "'");
  }
}

CheckpointHeader read_header(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("not a checkpoint file (bad magic)");
  const auto len = get_u64(in);
  if (len > (1u << 24)) throw DataError("checkpoint header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint truncated");
  CheckpointHeader h;
  try {
    const auto j = json::parse(text);
    h.kind = nn::parse_model_kind(j.at("kind").get<std::string>());
    h.input_width = j.at("input_width").get<std::size_t>();
    h.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    h.classes = j.at("classes").get<std::size_t>();
    h.config = nn::TrainConfig::from_json(j.at("config"));
    h.encoder_hash = parse_hex(j.at("encoder_hash").get<std::string>());
    h.shapes = j.at("shapes").get<std::vector<std::vector<std::size_t>>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  return h;
}

template <class Net>
void read_params(std::istream& in, Net& net, const CheckpointHeader& h) {
  if (block_shapes(net) != h.shapes) throw DataError("checkpoint block shapes disagree with its layer sizes");
  for (auto block : net.params())
    if (!in.read(reinterpret_cast<char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double))))
      throw DataError("checkpoint truncated in parameter data");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after checkpoint parameters");
  for (auto block : net.params())
    for (double v : block)
      if (!std::isfinite(v)) throw DataError("checkpoint holds non-finite parameters");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read checkpoint " + path);
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint " + path);
  return f;
}

}  // namespace

void write_checkpoint(std::ostream& out, const FnnModel& m) {
  write_any(out, nn::ModelKind::Fnn, m.net, m.config, m.encoder_hash);
}

void write_checkpoint(std::ostream& out, const LstmModel& m) {
  write_any(out, nn::ModelKind::Lstm, m.net, m.config, m.encoder_hash);
}

void save_checkpoint(const std::string& path, const FnnModel& m) {
  auto f = open_out(path);
  write_checkpoint(f, m);
}

void save_checkpoint(const std::string& path, const LstmModel& m) {
  auto f = open_out(path);
  write_checkpoint(f, m);
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  auto f = open_in(path);
  return read_header(f);
}

FnnModel read_fnn(std::istream& in) {
  const auto h = read_header(in);
  if (h.kind != nn::ModelKind::Fnn) throw DataError("checkpoint holds an lstm model, expected fnn");
  FnnModel m{nn::FnnNet::zeros(h.input_width, h.hidden, h.classes), h.config, h.encoder_hash};
  read_params(in, m.net, h);
  return m;
}

LstmModel read_lstm(std::istream& in) {
  const auto h = read_header(in);
  if (h.kind != nn::ModelKind::Lstm) throw DataError("checkpoint holds an fnn model, expected lstm");
  if (h.hidden.empty()) throw DataError("lstm checkpoint without layers");
  LstmModel m{nn::LstmNet::zeros(h.input_width, h.hidden, h.classes), h.config, h.encoder_hash};
  read_params(in, m.net, h);
  return m;
}

FnnModel load_fnn(const std::string& path) {
  auto f = open_in(path);
  return read_fnn(f);
}

LstmModel load_lstm(const std::string& path) {
  auto f = open_in(path);
  return read_lstm(f);
}

}  // namespace flowseq
