#include "flowseq/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>

#include "flowseq/error.hpp"
#include "flowseq/nn/loss.hpp"
#include "flowseq/nn/tbptt.hpp"

namespace flowseq {

using nn::Index;
using nn::Mat;

EncodedSequence encode_sequence(const Encoder& encoder, std::string name, std::span<const FlowRecord> records) {
  EncodedSequence s;
  s.name = std::move(name);
  s.x = encoder.encode_all(records);
  s.labels.reserve(records.size());
  for (const auto& r : records) s.labels.push_back(r.label.is_malicious() ? 1 : 0);
  return s;
}

Prediction prediction_from_scores(double s0, double s1) {
  const auto p = nn::softmax2({s0, s1});
  Prediction out;
  out.p_benign = p[0];
  out.p_malicious = p[1];
  out.cls = p[1] > p[0] ? 1 : 0;
  return out;
}

void write_loss_log(std::ostream& out, const TrainLog& log) {
  out << "epoch,scenario,mean_loss\n";
  for (const auto& r : log) out << r.epoch << ',' << r.scenario << ',' << format_double(r.mean_loss) << '\n';
}

nn::ClassWeights resolve_class_weights(const nn::TrainConfig& config, std::span<const EncodedSequence> train) {
  if (config.class_weights) return *config.class_weights;
  std::size_t mal = 0, total = 0;
  for (const auto& s : train) {
    total += s.labels.size();
    mal += static_cast<std::size_t>(std::count(s.labels.begin(), s.labels.end(), 1));
  }
  return nn::inverse_frequency_weights(total - mal, mal);
}

namespace {

std::size_t check_training_set(std::span<const EncodedSequence> train, const nn::TrainConfig& config,
                               std::size_t& width) {
  config.validate();
  std::size_t total = 0;
  width = 0;
  bool have_width = false;
  for (const auto& s : train) {
    if (static_cast<std::size_t>(s.x.cols()) != s.labels.size())
      throw ConfigError("sequence '" + s.name + "' has mismatched records and labels");
    if (s.labels.empty()) continue;
    if (have_width && static_cast<std::size_t>(s.x.rows()) != width)
      throw ConfigError("sequences were encoded with different widths");
    width = static_cast<std::size_t>(s.x.rows());
    have_width = true;
    total += s.labels.size();
  }
  if (total == 0) throw DataError("no training records");
  return total;
}

}  // namespace

FnnModel train_fnn(std::span<const EncodedSequence> train, const nn::TrainConfig& config,
                   std::uint64_t encoder_hash, TrainLog* log) {
  std::size_t width = 0;
  const std::size_t total = check_training_set(train, config, width);
  const auto weights = resolve_class_weights(config, train);

  Mat X(static_cast<Index>(width), static_cast<Index>(total));
  std::vector<int> y;
  y.reserve(total);
  Index col = 0;
  for (const auto& s : train) {
    if (s.labels.empty()) continue;
    X.middleCols(col, s.x.cols()) = s.x;
    col += s.x.cols();
    y.insert(y.end(), s.labels.begin(), s.labels.end());
  }

  nn::Rng rng(config.seed);
  FnnModel model{nn::FnnNet::uniform(width, config.hidden, rng), config, encoder_hash};
  auto grad = nn::FnnNet::zeros(width, config.hidden);
  auto adam = nn::AdamState::for_params(std::as_const(model.net).params());
  const auto adam_cfg = config.adam();

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  Mat xb;
  std::vector<int> yb;
  nn::FnnCache cache;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < total; b += config.batch_size) {
      const std::size_t e = std::min(total, b + config.batch_size);
      xb.resize(X.rows(), static_cast<Index>(e - b));
      yb.resize(e - b);
      for (std::size_t k = b; k < e; ++k) {
        xb.col(static_cast<Index>(k - b)) = X.col(static_cast<Index>(order[k]));
        yb[k - b] = y[order[k]];
      }
      Mat scores = nn::fnn_forward(model.net, xb, config.dropout_p, nn::Mode::Train, &rng, &cache);
      Mat dscores;
      const double loss = nn::weighted_cross_entropy(scores, yb, weights, &dscores);
      if (!std::isfinite(loss)) throw NumericError("fnn training diverged in epoch " + std::to_string(epoch));
      grad.set_zero();
      nn::fnn_backward(model.net, cache, dscores, grad);
      nn::adam_step(model.net.params(), std::as_const(grad).params(), adam, adam_cfg);
      epoch_loss += loss * static_cast<double>(e - b);
    }
    if (log) log->push_back({epoch, "*", epoch_loss / static_cast<double>(total)});
  }
  return model;
}

LstmModel train_lstm(std::span<const EncodedSequence> train, const nn::TrainConfig& config,
                     std::uint64_t encoder_hash, TrainLog* log) {
  std::size_t width = 0;
  check_training_set(train, config, width);
  const auto weights = resolve_class_weights(config, train);

  nn::Rng rng(config.seed);
  LstmModel model{nn::LstmNet::uniform(width, config.hidden, rng), config, encoder_hash};
  auto adam = nn::AdamState::for_params(std::as_const(model.net).params());

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (!train[i].labels.empty()) order.push_back(i);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      const auto& s = train[i];
      const auto r = nn::tbptt_train_sequence(model.net, adam, s.x, s.labels, config, weights, rng);
      if (log) log->push_back({epoch, s.name, r.mean_loss});
    }
  }
  return model;
}

std::vector<Prediction> predict_fnn(const FnnModel& model, const Mat& x) {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x.cols()));
  constexpr Index kBlock = 4096;
  for (Index b = 0; b < x.cols(); b += kBlock) {
    const Index n = std::min(kBlock, x.cols() - b);
    const Mat s = nn::fnn_forward(model.net, x.middleCols(b, n), 0.0, nn::Mode::Eval, nullptr);
    for (Index t = 0; t < n; ++t) out.push_back(prediction_from_scores(s(0, t), s(1, t)));
  }
  return out;
}

std::vector<Prediction> predict_lstm(const LstmModel& model, const Mat& x, const Mat* warmup) {
  auto state = nn::LstmState::zeros(model.net);
  if (warmup && warmup->cols() > 0)
    nn::stacked_lstm_forward(model.net, *warmup, state, 0.0, nn::Mode::Eval, nullptr);
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x.cols()));
  if (x.cols() == 0) return out;
  const Mat s = nn::stacked_lstm_forward(model.net, x, state, 0.0, nn::Mode::Eval, nullptr);
  for (Index t = 0; t < x.cols(); ++t) out.push_back(prediction_from_scores(s(0, t), s(1, t)));
  return out;
}

std::vector<Prediction> ensemble_or(std::span<const Prediction> a, std::span<const Prediction> b) {
  if (a.size() != b.size())
    throw DataError("ensemble members predicted " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " records");
  std::vector<Prediction> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i].cls = (a[i].cls == 1 || b[i].cls == 1) ? 1 : 0;
    out[i].p_malicious = std::max(a[i].p_malicious, b[i].p_malicious);
    out[i].p_benign = 1.0 - out[i].p_malicious;
  }
  return out;
}

void write_predictions(std::ostream& out, std::span<const PredictionRow> rows) {
  out << "scenario,index,timestamp,true_label,predicted_label,p_malicious\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.index << ',' << format_double(r.timestamp) << ',' << r.truth << ','
        << r.predicted << ',' << format_double(r.p_malicious) << '\n';
}

std::vector<PredictionRow> read_predictions(std::istream& in) {
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw DataError("prediction file is empty");
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw DataError("prediction line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      PredictionRow r;
      r.scenario = f[0];
      r.index = std::stoull(f[1]);
      r.timestamp = std::stod(f[2]);
      r.truth = std::stoi(f[3]);
      r.predicted = std::stoi(f[4]);
      r.p_malicious = std::stod(f[5]);
      if ((r.truth != 0 && r.truth != 1) || (r.predicted != 0 && r.predicted != 1))
        throw DataError("labels must be 0 or 1");
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw DataError("prediction line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("prediction line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_predictions_file(const std::string& path, std::span<const PredictionRow> rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  write_predictions(f, rows);
}

std::vector<PredictionRow> read_predictions_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  return read_predictions(f);
}

}  // namespace flowseq
