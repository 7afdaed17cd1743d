#include "flowseq/nn/train_config.hpp"

#include <algorithm>
#include <iterator>

#include "flowseq/error.hpp"

namespace flowseq::nn {

std::string to_string(ModelKind k) { return k == ModelKind::Fnn ? "fnn" : "lstm"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "fnn") return ModelKind::Fnn;
  if (s == "lstm") return ModelKind::Lstm;
  throw ConfigError("unknown model '" + s + "' (expected fnn or lstm)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (tbptt_window && *tbptt_window < 1) throw ConfigError("tbptt_window must be >= 1");
  if (class_weights && !(class_weights->benign > 0.0 && class_weights->malicious > 0.0))
    throw ConfigError("class weights must be > 0");
  if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("hidden sizes must be >= 1");
}

AdamConfig TrainConfig::adam() const {
  AdamConfig a;
  a.learning_rate = learning_rate;
  return a;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j{{"learning_rate", learning_rate},
                   {"epochs", epochs},
                   {"dropout", dropout_p},
                   {"batch_size", batch_size},
                   {"seed", seed},
                   {"hidden", hidden}};
  j["tbptt_window"] = tbptt_window ? nlohmann::json(*tbptt_window) : nlohmann::json(nullptr);
  j["class_weights"] = class_weights ? nlohmann::json::array({class_weights->benign, class_weights->malicious})
                                     : nlohmann::json(nullptr);
  return j;
}

namespace {

std::size_t get_count(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<long long>();
  if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
  return static_cast<std::size_t>(v);
}

}  // namespace

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  TrainConfig c = base;
  if (!j.is_object()) throw ConfigError("training config must be an object");
  try {
    for (const auto& [key, _] : j.items()) {
      static const char* known[] = {"learning_rate", "epochs", "dropout", "batch_size", "tbptt_window",
                                    "class_weights", "seed", "hidden"};
      if (std::find(std::begin(known), std::end(known), key) == std::end(known))
        throw ConfigError("unknown training key '" + key + "'");
    }
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("epochs")) c.epochs = get_count(j, "epochs");
    if (j.contains("dropout")) c.dropout_p = j.at("dropout").get<double>();
    if (j.contains("batch_size")) c.batch_size = get_count(j, "batch_size");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("tbptt_window")) {
      if (j.at("tbptt_window").is_null())
        c.tbptt_window.reset();
      else
        c.tbptt_window = get_count(j, "tbptt_window");
    }
    if (j.contains("class_weights")) {
      const auto& w = j.at("class_weights");
      if (w.is_null() || (w.is_string() && w.get<std::string>() == "auto")) {
        c.class_weights.reset();
      } else {
        const auto v = w.get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("class_weights must be [w_benign, w_malicious]");
        c.class_weights = ClassWeights{v[0], v[1]};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

TrainConfig reference_defaults(SchemaStyle style, ModelKind kind) {
  TrainConfig c;
  c.learning_rate = 0.001;
  if (style == SchemaStyle::Cicids) {
    if (kind == ModelKind::Lstm) {
      c.epochs = 30;
      c.dropout_p = 0.2;
      c.batch_size = 1;
      c.hidden = {256, 256};
    } else {
      c.epochs = 20;
      c.dropout_p = 0.3;
      c.batch_size = 512;
      c.hidden = {256, 256};
    }
  } else {
    c.epochs = 100;
    c.dropout_p = 0.2;
    if (kind == ModelKind::Lstm) {
      c.batch_size = 1;
      c.tbptt_window = 512;
      c.hidden = {256, 256};
    } else {
      c.batch_size = 1024;
      c.hidden = {512, 512};
    }
  }
  return c;
}

ClassWeights inverse_frequency_weights(std::size_t n_benign, std::size_t n_malicious) {
  if (n_benign == 0 || n_malicious == 0) return {1.0, 1.0};
  return {1.0, static_cast<double>(n_benign) / static_cast<double>(n_malicious)};
}

}  // namespace flowseq::nn
