#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "flowseq/error.hpp"
#include "flowseq/experiment.hpp"
#include "flowseq/flow.hpp"
#include "flowseq/metrics.hpp"
#include "flowseq/nn/gradcheck.hpp"
#include "flowseq/scenario.hpp"
#include "flowseq/synth.hpp"
#include "flowseq/version.hpp"

namespace py = pybind11;
using namespace flowseq;

namespace {

// JSON travels across the boundary as text; Python callers pass plain dicts
// through json.dumps in the package wrapper.
nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad JSON: ") + e.what());
  }
}

py::dict record_dict(const FlowRecord& r) {
  py::dict d;
  d["timestamp"] = r.timestamp;
  d["duration"] = r.duration;
  d["protocol"] = r.protocol;
  d["src_port"] = r.src_port;
  d["dst_port"] = r.dst_port;
  d["direction"] = std::string(to_string(r.direction));
  d["total_packets"] = r.total_packets;
  d["total_bytes"] = r.total_bytes;
  d["src_bytes"] = r.src_bytes;
  d["iat_min"] = r.iat_min;
  d["iat_max"] = r.iat_max;
  d["iat_avg"] = r.iat_avg;
  d["src_host"] = r.src_host;
  d["dst_host"] = r.dst_host;
  d["attack_type"] = r.label.is_malicious() ? py::object(py::str(r.label.attack_type())) : py::object(py::none());
  return d;
}

FlowDataset timeline(const std::vector<double>& timestamps, const std::vector<std::optional<std::string>>& types) {
  if (timestamps.size() != types.size()) throw DataError("timestamps and attack types differ in length");
  FlowDataset d;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    FlowRecord r;
    r.timestamp = timestamps[i];
    if (types[i]) r.label = Label::malicious(*types[i]);
    d.records.push_back(std::move(r));
  }
  std::stable_sort(d.records.begin(), d.records.end(),
                   [](const FlowRecord& a, const FlowRecord& b) { return a.timestamp < b.timestamp; });
  return d;
}

py::dict cm_dict(const ConfusionMatrix& cm) {
  py::dict d;
  d["tp"] = cm.tp;
  d["fn"] = cm.fn;
  d["tn"] = cm.tn;
  d["fp"] = cm.fp;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = std::string(kVersion);

  auto base = py::register_exception<Error>(m, "FlowseqError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.def(
      "parse_flows",
      [](const std::string& text, const std::string& schema_json) {
        const auto schema = schema_json.empty() ? FlowSchema::canonical(SchemaStyle::Ctu13)
                                                : FlowSchema::from_json(parse_json(schema_json));
        std::istringstream in(text);
        const auto res = parse_flows(in, schema);
        py::list recs, rej;
        for (const auto& r : res.dataset.records) recs.append(record_dict(r));
        for (const auto& r : res.rejections) rej.append(format_rejection(r));
        return py::make_tuple(recs, rej);
      },
      py::arg("text"), py::arg("schema_json") = "");

  m.def(
      "classify_direction",
      [](const std::string& src, const std::string& dst, const std::vector<std::string>& internal) {
        return std::string(to_string(classify_direction(src, dst, HostSet(internal))));
      },
      py::arg("src"), py::arg("dst"), py::arg("internal"));

  m.def(
      "detect_intervals",
      [](const std::vector<double>& timestamps, const std::vector<std::optional<std::string>>& types,
         const std::string& attack_type, std::optional<double> gap_threshold, double padding) {
        const auto iv = detect_intervals(timeline(timestamps, types), attack_type, {gap_threshold, padding});
        std::vector<std::pair<double, double>> out;
        for (const auto& i : iv) out.emplace_back(i.start, i.end);
        return out;
      },
      py::arg("timestamps"), py::arg("attack_types"), py::arg("attack_type"), py::arg("gap_threshold") = py::none(),
      py::arg("padding") = 0.0);

  m.def(
      "beacon_period",
      [](std::vector<double> ts, double bin_width, std::size_t max_lag) {
        std::sort(ts.begin(), ts.end());
        return beacon_period(ts, bin_width, max_lag);
      },
      py::arg("timestamps"), py::arg("bin_width") = 1.0, py::arg("max_lag") = 100);

  m.def(
      "confusion",
      [](const std::vector<int>& predicted, const std::vector<int>& truth) { return cm_dict(confusion(predicted, truth)); },
      py::arg("predicted"), py::arg("truth"));

  m.def(
      "f1",
      [](std::uint64_t tp, std::uint64_t fn, std::uint64_t tn, std::uint64_t fp) { return f1({tp, fn, tn, fp}); },
      py::arg("tp"), py::arg("fn"), py::arg("tn"), py::arg("fp"));

  m.def(
      "ensemble_or",
      [](const std::vector<int>& a, const std::vector<int>& b) {
        if (a.size() != b.size()) throw DataError("ensemble inputs differ in length");
        std::vector<int> out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] != 0 || b[i] != 0) ? 1 : 0;
        return out;
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "synth_generate",
      [](const std::string& config_json) {
        const auto cfg = SynthConfig::from_json(parse_json(config_json.empty() ? "{}" : config_json));
        const auto r = generate(cfg);
        std::ostringstream flows;
        write_flows(flows, r.dataset);
        std::vector<std::pair<double, double>> iv;
        for (const auto& i : r.intervals) iv.emplace_back(i.start, i.end);
        py::dict d;
        d["flows_csv"] = flows.str();
        d["intervals"] = iv;
        d["gap_threshold"] = r.gap_threshold;
        d["padding"] = r.padding;
        py::list trig;
        for (const auto& t : r.trigger) trig.append(py::make_tuple(t.protocol, t.dst_port));
        d["trigger"] = trig;
        return d;
      },
      py::arg("config_json") = "");

  m.def(
      "gradcheck",
      [](const std::string& model, std::uint64_t seed, std::vector<std::size_t> hidden, std::size_t steps,
         const std::string& fault) {
        nn::ModelCheckSpec spec;
        spec.seed = seed;
        spec.hidden = std::move(hidden);
        spec.steps = steps;
        if (fault == "drop-cell-carry")
          spec.fault = nn::BackwardFault::DropCellCarry;
        else if (fault == "skip-relu-mask")
          spec.fault = nn::BackwardFault::SkipReluMask;
        else if (fault != "none")
          throw ConfigError("unknown fault '" + fault + "'");
        if (model == "fnn") return nn::gradcheck_fnn(spec).max_rel_error;
        if (model == "lstm") return nn::gradcheck_lstm(spec).max_rel_error;
        throw ConfigError("model must be fnn or lstm");
      },
      py::arg("model"), py::arg("seed") = 1, py::arg("hidden") = std::vector<std::size_t>{8, 8},
      py::arg("steps") = 5, py::arg("fault") = "none");

  m.def(
      "separation_experiment",
      [](const std::string& config_json, std::uint64_t seed) {
        auto cfg = SynthConfig::from_json(parse_json(config_json.empty() ? "{}" : config_json));
        auto fc = synth_train_config(nn::ModelKind::Fnn);
        auto lc = synth_train_config(nn::ModelKind::Lstm);
        fc.seed = lc.seed = seed;
        py::gil_scoped_release release;
        const auto r = separation_experiment(cfg, fc, lc);
        return std::make_pair(r.f1_fnn, r.f1_lstm);
      },
      py::arg("config_json") = "", py::arg("seed") = 1);
}
