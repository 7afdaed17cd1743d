#include "flowseq/experiment.hpp"

#include <algorithm>
#include <vector>

#include "flowseq/detectors.hpp"
#include "flowseq/error.hpp"

namespace flowseq {

FeatureSpec synth_feature_spec() {
  FeatureSpec s;
  s.numeric = {"duration", "total_packets", "total_bytes", "packets_per_sec", "bytes_per_packet"};
  s.categorical = {"protocol", "dst_port"};
  s.port_top_k = 16;
  return s;
}

nn::TrainConfig synth_train_config(nn::ModelKind kind) {
  nn::TrainConfig c;
  c.learning_rate = 0.01;
  c.dropout_p = 0.0;
  c.hidden = {32, 32};
  if (kind == nn::ModelKind::Fnn) {
    c.epochs = 20;
    c.batch_size = 64;
  } else {
    c.epochs = 30;
    c.batch_size = 1;
    c.tbptt_window = 50;
  }
  return c;
}

namespace {

std::vector<int> classes(const std::vector<Prediction>& p) {
  std::vector<int> out;
  out.reserve(p.size());
  for (const auto& x : p) out.push_back(x.cls);
  return out;
}

double fraction(const EvalReport& r) {
  const auto v = r.summary.f1();
  return v ? *v / 100.0 : 0.0;
}

}  // namespace

ExperimentResult separation_experiment(const SynthConfig& config, const nn::TrainConfig& fnn_cfg,
                                       const nn::TrainConfig& lstm_cfg, const ExperimentOptions& options) {
  const auto synth = generate(config);
  IntervalOptions io;
  io.gap_threshold = synth.gap_threshold;
  io.padding = synth.padding;
  const auto intervals = detect_intervals(synth.dataset, config.attack_type, io);
  const auto extraction = extract_scenarios(synth.dataset, intervals);

  std::vector<ScenarioSplit> splits;
  std::vector<std::vector<FlowRecord>> train_sets;
  for (const auto& s : extraction.scenarios) {
    splits.push_back(split_scenario(s, options.split));
    train_sets.push_back(splits.back().train);
  }
  const auto encoder = fit_encoder(std::span<const std::vector<FlowRecord>>(train_sets), options.features);

  std::vector<EncodedSequence> train, test;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& name = extraction.scenarios[i].name;
    train.push_back(encode_sequence(encoder, name, splits[i].train));
    test.push_back(encode_sequence(encoder, name, splits[i].test));
  }
  const auto fnn = train_fnn(train, fnn_cfg, encoder.hash());
  const auto lstm = train_lstm(train, lstm_cfg, encoder.hash());

  std::vector<ReportRow> fnn_rows, lstm_rows;
  ExperimentResult r;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].size() == 0) continue;
    const auto& tr = train[i];
    const auto w = std::min<std::size_t>(options.warmup_len, tr.size());
    const nn::Mat warm = tr.x.rightCols(static_cast<nn::Index>(w));
    fnn_rows.push_back({test[i].name, confusion(classes(predict_fnn(fnn, test[i].x)), test[i].labels)});
    lstm_rows.push_back({test[i].name, confusion(classes(predict_lstm(lstm, test[i].x, &warm)), test[i].labels)});
    r.test_records += test[i].size();
  }
  if (fnn_rows.empty()) throw DataError("experiment produced no test records");
  r.fnn = scenario_report(std::move(fnn_rows));
  r.lstm = scenario_report(std::move(lstm_rows));
  r.f1_fnn = fraction(r.fnn);
  r.f1_lstm = fraction(r.lstm);
  r.scenarios = extraction.scenarios.size();
  return r;
}

}  // namespace flowseq
