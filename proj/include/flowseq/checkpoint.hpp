#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowseq/detectors.hpp"

namespace flowseq {

// File layout: the 8 bytes "FSQCKPT1", a little-endian uint64 header length, a JSON
// header, then every parameter block as little-endian float64 in declared order
// (column-major within a matrix).
inline constexpr char kCheckpointMagic[] = "FSQCKPT1";

struct CheckpointHeader {
  nn::ModelKind kind = nn::ModelKind::Fnn;
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden;
  std::size_t classes = 2;
  nn::TrainConfig config;
  std::uint64_t encoder_hash = 0;
  std::vector<std::vector<std::size_t>> shapes;  // rows, cols per block
};

void write_checkpoint(std::ostream& out, const FnnModel& model);
void write_checkpoint(std::ostream& out, const LstmModel& model);
void save_checkpoint(const std::string& path, const FnnModel& model);
void save_checkpoint(const std::string& path, const LstmModel& model);

CheckpointHeader read_checkpoint_header(const std::string& path);
FnnModel load_fnn(const std::string& path);
LstmModel load_lstm(const std::string& path);
FnnModel read_fnn(std::istream& in);
LstmModel read_lstm(std::istream& in);

}  // namespace flowseq
