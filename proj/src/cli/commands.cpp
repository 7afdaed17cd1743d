#include "flowseq/cli/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "flowseq/checkpoint.hpp"
#include "flowseq/error.hpp"
#include "flowseq/experiment.hpp"
#include "flowseq/features.hpp"
#include "flowseq/nn/gradcheck.hpp"
#include "flowseq/version.hpp"

namespace flowseq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Paths::manifest() const { return (fs::path(root) / "manifest.tsv").string(); }
std::string Paths::encoder() const { return (fs::path(root) / "encoder.json").string(); }
std::string Paths::rejections() const { return (fs::path(root) / "rejections.txt").string(); }
std::string Paths::scenario_file(const std::string& s, bool train) const {
  return (fs::path(root) / "scenarios" / (file_stem(s) + (train ? ".train.csv" : ".test.csv"))).string();
}
std::string Paths::checkpoint(nn::ModelKind k) const { return (fs::path(root) / (nn::to_string(k) + ".ckpt")).string(); }
std::string Paths::loss_log(nn::ModelKind k) const { return (fs::path(root) / (nn::to_string(k) + "_loss.csv")).string(); }
std::string Paths::predictions(const std::string& m) const { return (fs::path(root) / ("predictions_" + m + ".csv")).string(); }
std::string Paths::report_csv(const std::string& m) const { return (fs::path(root) / ("report_" + m + ".csv")).string(); }
std::string Paths::report_table(const std::string& m) const { return (fs::path(root) / ("report_" + m + ".txt")).string(); }
std::string Paths::stamp(const std::string& c) const { return (fs::path(root) / (c + ".stamp.json")).string(); }

std::string file_stem(const std::string& s) {
  std::string out;
  for (unsigned char ch : s) out += std::isalnum(ch) || ch == '-' || ch == '_' ? static_cast<char>(ch) : '_';
  return out.empty() ? "_" : out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path + " (run the earlier pipeline stage first)");
  return f;
}

std::string fmt(double v) { return format_double(v); }

FlowDataset load_role(const RunConfig& c, DatasetRole role, std::ostream& log, std::ostream& rejections) {
  FlowDataset all;
  all.style = c.style;
  for (const auto& d : c.datasets) {
    if (d.role != role) continue;
    if (!fs::exists(d.path)) throw ConfigError("dataset '" + d.path + "' does not exist");
    auto parsed = parse_flows_file(d.path, c.schema);
    for (const auto& r : parsed.rejections) rejections << d.path << ": " << format_rejection(r) << '\n';
    log << "read " << parsed.dataset.size() << " flows from " << d.path;
    if (!parsed.rejections.empty()) log << " (" << parsed.rejections.size() << " rejected)";
    log << '\n';
    all.records.insert(all.records.end(), std::make_move_iterator(parsed.dataset.records.begin()),
                       std::make_move_iterator(parsed.dataset.records.end()));
    all.source_name += (all.source_name.empty() ? "" : "+") + d.path;
  }
  std::stable_sort(all.records.begin(), all.records.end(),
                   [](const FlowRecord& a, const FlowRecord& b) { return a.timestamp < b.timestamp; });
  return filter_hosts(all, c.excluded_hosts);
}

std::vector<FlowRecord> load_split(const RunConfig& c, const Paths& p, const std::string& scenario, bool train) {
  const auto path = p.scenario_file(scenario, train);
  auto f = open_in(path);
  auto parsed = parse_flows(f, FlowSchema::canonical(c.style), path);
  if (!parsed.rejections.empty())
    throw DataError(path + ": " + format_rejection(parsed.rejections.front()));
  return std::move(parsed.dataset.records);
}

Manifest read_manifest_file(const Paths& p) {
  auto f = open_in(p.manifest());
  return read_manifest(f);
}

}  // namespace

void write_stamp(const std::string& path, const std::string& command, const std::string& config_hash,
                 std::uint64_t seed, const json& extra) {
  json j{{"command", command}, {"config_hash", config_hash}, {"seed", seed}, {"version", kVersion}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

Manifest cmd_extract(const RunConfig& c, std::ostream& log) {
  const Paths p{c.output_dir};
  fs::create_directories(fs::path(p.root) / "scenarios");
  auto rej = open_out(p.rejections());
  const auto attack = load_role(c, DatasetRole::Attack, log, rej);
  const bool have_benign = std::any_of(c.datasets.begin(), c.datasets.end(),
                                       [](const DatasetRef& d) { return d.role == DatasetRole::Benign; });

  Manifest m;
  m.notes.push_back("config_hash: " + c.hash());
  m.notes.push_back("gap_threshold: " + (c.extraction.gap_threshold ? fmt(*c.extraction.gap_threshold) : "auto"));
  m.notes.push_back("padding: " + fmt(c.extraction.padding));
  m.notes.push_back("train_fraction: " + fmt(c.extraction.split.train_fraction));

  const auto types = attack_types(attack);
  std::vector<Interval> intervals;
  for (const auto& iv : c.intervals) {
    if (std::find(types.begin(), types.end(), iv.attack_type) == types.end()) {
      const auto w = "documented interval for '" + iv.attack_type + "' matches no malicious flows";
      log << "warning: " << w << '\n';
      m.notes.push_back("warning: " + w);
    }
    intervals.push_back(iv);
  }
  IntervalOptions io;
  io.gap_threshold = c.extraction.gap_threshold;
  io.padding = c.extraction.padding;
  for (const auto& t : types) {
    const bool documented = std::any_of(c.intervals.begin(), c.intervals.end(),
                                        [&](const Interval& iv) { return iv.attack_type == t; });
    if (c.auto_detects(t)) {
      for (auto& iv : detect_intervals(attack, t, io)) intervals.push_back(std::move(iv));
    } else if (!documented) {
      throw ConfigError("attack type '" + t + "' has no documented intervals and auto-detect is off for it");
    }
  }
  std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });

  auto extraction = extract_scenarios(attack, intervals);
  m.discarded = extraction.discarded;
  for (const auto& w : extraction.warnings) {
    log << "warning: " << w << '\n';
    m.notes.push_back("warning: " + w);
  }
  std::vector<Scenario> scenarios = std::move(extraction.scenarios);

  if (c.extraction.benign_scenarios > 0) {
    if (!have_benign) throw ConfigError("benign_scenarios > 0 but no dataset has role 'benign'");
    const auto benign = load_role(c, DatasetRole::Benign, log, rej);
    auto made = make_benign_scenarios(benign, c.extraction.benign_scenarios, c.extraction.benign_target_len);
    for (const auto& w : made.warnings) {
      log << "warning: " << w << '\n';
      m.notes.push_back("warning: " + w);
    }
    for (auto& s : made.scenarios) scenarios.push_back(std::move(s));
  }
  if (scenarios.empty()) throw DataError("extraction produced no scenarios");

  for (const auto& s : scenarios) {
    auto split = split_scenario(s, c.extraction.split);
    if (split.warning) log << "warning: " << s.name << ": " << *split.warning << '\n';
    write_flows_file(p.scenario_file(s.name, true), {split.train, c.style, s.name});
    write_flows_file(p.scenario_file(s.name, false), {split.test, c.style, s.name});
    m.rows.push_back(manifest_row(s, split));
  }
  {
    auto f = open_out(p.manifest());
    write_manifest(f, m);
  }
  write_stamp(p.stamp("extract"), "extract", c.hash(), c.seed);
  log << "extracted " << m.rows.size() << " scenarios, " << m.discarded << " flows discarded -> " << p.manifest()
      << '\n';
  return m;
}

void cmd_train(const RunConfig& c, nn::ModelKind kind, std::ostream& log) {
  const Paths p{c.output_dir};
  const auto m = read_manifest_file(p);
  std::vector<std::string> names;
  std::vector<std::vector<FlowRecord>> train_sets;
  for (const auto& row : m.rows) {
    names.push_back(row.name);
    train_sets.push_back(load_split(c, p, row.name, true));
  }
  const auto encoder = fit_encoder(std::span<const std::vector<FlowRecord>>(train_sets), c.features);
  save_encoder(p.encoder(), encoder);
  std::vector<EncodedSequence> train;
  for (std::size_t i = 0; i < names.size(); ++i) train.push_back(encode_sequence(encoder, names[i], train_sets[i]));

  const auto& cfg = c.train_config(kind);
  TrainLog tl;
  log << "training " << nn::to_string(kind) << " on " << train.size() << " scenarios, " << cfg.epochs
      << " epochs, seed " << cfg.seed << '\n';
  if (kind == nn::ModelKind::Fnn)
    save_checkpoint(p.checkpoint(kind), train_fnn(train, cfg, encoder.hash(), &tl));
  else
    save_checkpoint(p.checkpoint(kind), train_lstm(train, cfg, encoder.hash(), &tl));
  {
    auto f = open_out(p.loss_log(kind));
    write_loss_log(f, tl);
  }
  write_stamp(p.stamp("train_" + nn::to_string(kind)), "train", c.hash(), cfg.seed,
              {{"model", nn::to_string(kind)}, {"encoder_hash", hex64(encoder.hash())}});
  log << "wrote " << p.checkpoint(kind) << '\n';
}

EvalReport report_from_predictions(const std::vector<PredictionRow>& rows) {
  std::vector<ReportRow> out;
  std::map<std::string, std::size_t> at;
  for (const auto& r : rows) {
    auto [it, fresh] = at.emplace(r.scenario, out.size());
    if (fresh) out.push_back({r.scenario, {}});
    auto& cm = out[it->second].cm;
    if (r.truth)
      ++(r.predicted ? cm.tp : cm.fn);
    else
      ++(r.predicted ? cm.fp : cm.tn);
  }
  return scenario_report(std::move(out));
}

namespace {

void write_reports(const Paths& p, const std::string& model, const EvalReport& report, std::ostream& log) {
  {
    auto f = open_out(p.report_csv(model));
    write_report_csv(f, report);
  }
  std::ostringstream table;
  write_report_table(table, report, model);
  {
    auto f = open_out(p.report_table(model));
    f << table.str();
  }
  log << table.str();
}

}  // namespace

EvalReport cmd_eval(const RunConfig& c, nn::ModelKind kind, const std::optional<std::string>& checkpoint,
                    std::ostream& log) {
  const Paths p{c.output_dir};
  const auto ckpt = checkpoint ? *checkpoint : p.checkpoint(kind);
  const auto encoder = load_encoder(p.encoder());
  const auto header = read_checkpoint_header(ckpt);
  if (header.kind != kind) throw DataError(ckpt + " holds a " + nn::to_string(header.kind) + " model");
  if (header.encoder_hash != encoder.hash())
    throw DataError("checkpoint was trained with encoder " + hex64(header.encoder_hash) + " but " + p.encoder() +
                    " is " + hex64(encoder.hash()));

  std::optional<FnnModel> fnn;
  std::optional<LstmModel> lstm;
  if (kind == nn::ModelKind::Fnn)
    fnn = load_fnn(ckpt);
  else
    lstm = load_lstm(ckpt);

  const auto m = read_manifest_file(p);
  std::vector<PredictionRow> rows;
  for (const auto& row : m.rows) {
    const auto test = load_split(c, p, row.name, false);
    if (test.empty()) continue;
    const auto enc = encode_sequence(encoder, row.name, test);
    std::vector<Prediction> preds;
    if (fnn) {
      preds = predict_fnn(*fnn, enc.x);
    } else {
      nn::Mat warm;
      if (c.warmup_len > 0) {
        const auto train = load_split(c, p, row.name, true);
        const auto w = std::min(c.warmup_len, train.size());
        warm = encoder.encode_all(std::span<const FlowRecord>(train).last(w));
      }
      preds = predict_lstm(*lstm, enc.x, c.warmup_len > 0 ? &warm : nullptr);
    }
    for (std::size_t i = 0; i < test.size(); ++i)
      rows.push_back({row.name, i, test[i].timestamp, enc.labels[i], preds[i].cls, preds[i].p_malicious});
  }
  const auto model = nn::to_string(kind);
  write_predictions_file(p.predictions(model), rows);
  const auto report = report_from_predictions(rows);
  write_reports(p, model, report, log);
  write_stamp(p.stamp("eval_" + model), "eval", c.hash(), c.seed,
              {{"model", model}, {"checkpoint", ckpt}, {"warmup_len", c.warmup_len}});
  return report;
}

DeltaReport cmd_ensemble(const RunConfig& c, std::ostream& log) {
  const Paths p{c.output_dir};
  const auto fnn = read_predictions_file(p.predictions("fnn"));
  const auto lstm = read_predictions_file(p.predictions("lstm"));
  if (fnn.size() != lstm.size())
    throw DataError("prediction files cover " + std::to_string(fnn.size()) + " and " + std::to_string(lstm.size()) +
                    " records");
  std::vector<Prediction> a, b;
  for (std::size_t i = 0; i < fnn.size(); ++i) {
    if (fnn[i].scenario != lstm[i].scenario || fnn[i].index != lstm[i].index || fnn[i].truth != lstm[i].truth)
      throw DataError("prediction files disagree on record " + std::to_string(i));
    a.push_back({fnn[i].predicted, 1.0 - fnn[i].p_malicious, fnn[i].p_malicious});
    b.push_back({lstm[i].predicted, 1.0 - lstm[i].p_malicious, lstm[i].p_malicious});
  }
  const auto ens = ensemble_or(b, a);
  std::vector<PredictionRow> rows = lstm;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].predicted = ens[i].cls;
    rows[i].p_malicious = ens[i].p_malicious;
  }
  write_predictions_file(p.predictions("ensemble"), rows);
  const auto ens_report = report_from_predictions(rows);
  write_reports(p, "ensemble", ens_report, log);
  const auto delta = delta_report(ens_report, report_from_predictions(lstm));
  {
    auto f = open_out(p.report_csv("delta"));
    write_delta_csv(f, delta);
  }
  std::ostringstream table;
  write_delta_table(table, delta, "LSTM+FNN vs LSTM");
  {
    auto f = open_out(p.report_table("delta"));
    f << table.str();
  }
  log << table.str();
  write_stamp(p.stamp("ensemble"), "ensemble", c.hash(), c.seed);
  return delta;
}

SynthResult cmd_synth(const SynthConfig& config, const std::string& output_dir, std::ostream& log) {
  fs::create_directories(output_dir);
  auto r = generate(config);
  const auto flows = (fs::path(output_dir) / "flows.csv").string();
  write_flows_file(flows, r.dataset);
  {
    auto f = open_out((fs::path(output_dir) / "intervals.csv").string());
    write_intervals(f, r);
  }
  // A run config that feeds the generated flows straight into extract.
  auto small = [](nn::ModelKind k) {
    auto j = synth_train_config(k).to_json();
    j.erase("seed");
    return j;
  };
  json run{{"dataset_style", std::string(to_string(config.style))},
           {"datasets", json::array({{{"path", "flows.csv"}, {"role", "attack"}}})},
           {"auto_detect", true},
           {"extraction", {{"gap_threshold", r.gap_threshold}, {"padding", r.padding}}},
           {"features", synth_feature_spec().to_json()},
           {"fnn", small(nn::ModelKind::Fnn)},
           {"lstm", small(nn::ModelKind::Lstm)},
           {"output_dir", "run"},
           {"seed", config.seed}};
  {
    auto f = open_out((fs::path(output_dir) / "run.json").string());
    f << run.dump(2) << '\n';
  }
  const auto cfg_json = config.to_json();
  write_stamp((fs::path(output_dir) / "synth.stamp.json").string(), "synth", hex64(fnv1a64(cfg_json.dump())),
              config.seed, {{"config", cfg_json}});
  std::size_t mal = 0;
  for (const auto& rec : r.dataset.records) mal += rec.label.is_malicious() ? 1 : 0;
  log << "generated " << r.dataset.size() << " flows (" << mal << " malicious) in " << r.intervals.size()
      << " campaigns -> " << flows << '\n';
  return r;
}

GradcheckSummary cmd_gradcheck(std::size_t seeds, nn::BackwardFault fault, double tol, std::ostream& log) {
  GradcheckSummary s;
  auto report = [&](const char* what, std::uint64_t seed, const nn::GradcheckResult& r) {
    const bool ok = r.max_rel_error < tol;
    s.passed = s.passed && ok;
    s.worst = std::max(s.worst, r.max_rel_error);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-5s seed %2llu  max rel err %.3e  (%zu checked, %zu skipped)  %s\n", what,
                  static_cast<unsigned long long>(seed), r.max_rel_error, r.checked, r.skipped, ok ? "ok" : "FAIL");
    log << buf;
  };
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    nn::ModelCheckSpec spec;
    spec.seed = seed;
    spec.fault = fault;
    report("loss", seed, nn::gradcheck_loss(seed));
    report("fnn", seed, nn::gradcheck_fnn(spec));
    report("lstm", seed, nn::gradcheck_lstm(spec));
  }
  log << (s.passed ? "gradcheck passed" : "gradcheck FAILED") << " (worst " << s.worst << ", tolerance " << tol
      << ")\n";
  return s;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"flowseq: temporal attack scenarios, FNN and LSTM flow detectors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, output_dir, model = "fnn", checkpoint, synth_config, confusion, ens_counts, base_counts;
  std::optional<std::uint64_t> seed;
  std::size_t seeds = 5;
  double tolerance = 1e-4;
  std::string fault = "none";

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* o = sub->add_option("-c,--config", config_path, "run config (JSON)");
    if (needs_config) o->required()->check(CLI::ExistingFile);
    sub->add_option("-s,--seed", seed, "override the config seed");
    sub->add_option("-o,--output-dir", output_dir, "override the output directory");
  };
  auto* extract = app.add_subcommand("extract", "build attack/benign scenarios and temporal splits");
  add_common(extract, true);
  auto* train = app.add_subcommand("train", "train a detector on the extracted train splits");
  add_common(train, true);
  train->add_option("-m,--model", model, "fnn or lstm")->check(CLI::IsMember({"fnn", "lstm"}));
  auto* eval = app.add_subcommand("eval", "score a checkpoint on the test splits, or replay confusion counts");
  add_common(eval, false);
  eval->add_option("-m,--model", model, "fnn or lstm")->check(CLI::IsMember({"fnn", "lstm"}));
  eval->add_option("--checkpoint", checkpoint, "checkpoint (default <output>/<model>.ckpt)");
  eval->add_option("--confusion", confusion, "CSV of scenario,tp,fn,tn,fp to report on")->check(CLI::ExistingFile);
  auto* ensemble = app.add_subcommand("ensemble", "logical-OR of the FNN and LSTM predictions");
  add_common(ensemble, false);
  ensemble->add_option("--ensemble-counts", ens_counts, "ensemble confusion CSV")->check(CLI::ExistingFile);
  ensemble->add_option("--baseline-counts", base_counts, "baseline confusion CSV")->check(CLI::ExistingFile);
  auto* synth = app.add_subcommand("synth", "generate a labelled synthetic flow dataset");
  synth->add_option("--synth-config", synth_config, "generator settings (JSON)")->check(CLI::ExistingFile);
  synth->add_option("-s,--seed", seed, "override the generator seed");
  synth->add_option("-o,--output-dir", output_dir, "output directory")->required();
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the hand-derived backward passes");
  gradcheck->add_option("--seeds", seeds, "number of random seeds")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", tolerance, "max relative error");
  gradcheck->add_option("--inject-fault", fault, "testing only")
      ->check(CLI::IsMember({"none", "drop-cell-carry", "skip-relu-mask"}))
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  auto load = [&] {
    return RunConfig::load(config_path, seed, output_dir.empty() ? std::nullopt : std::optional<std::string>(output_dir));
  };
  try {
    if (extract->parsed()) {
      cmd_extract(load(), out);
    } else if (train->parsed()) {
      cmd_train(load(), nn::parse_model_kind(model), out);
    } else if (eval->parsed()) {
      if (!confusion.empty()) {
        std::ifstream f(confusion);
        const auto report = scenario_report(read_confusion_csv(f));
        if (!output_dir.empty()) {
          fs::create_directories(output_dir);
          write_reports(Paths{output_dir}, "confusion", report, out);
        } else {
          write_report_table(out, report);
        }
      } else {
        if (config_path.empty()) throw ConfigError("eval needs --config (or --confusion)");
        cmd_eval(load(), nn::parse_model_kind(model),
                 checkpoint.empty() ? std::nullopt : std::optional<std::string>(checkpoint), out);
      }
    } else if (ensemble->parsed()) {
      if (!ens_counts.empty() || !base_counts.empty()) {
        if (ens_counts.empty() || base_counts.empty())
          throw ConfigError("--ensemble-counts and --baseline-counts go together");
        std::ifstream fe(ens_counts), fb(base_counts);
        const auto delta = delta_report(scenario_report(read_confusion_csv(fe)), scenario_report(read_confusion_csv(fb)));
        write_delta_table(out, delta);
        if (!output_dir.empty()) {
          fs::create_directories(output_dir);
          auto f = open_out(Paths{output_dir}.report_csv("delta"));
          write_delta_csv(f, delta);
        }
      } else {
        if (config_path.empty()) throw ConfigError("ensemble needs --config (or the two count files)");
        cmd_ensemble(load(), out);
      }
    } else if (synth->parsed()) {
      SynthConfig sc;
      if (!synth_config.empty()) {
        std::ifstream f(synth_config);
        json j;
        try {
          j = json::parse(f);
        } catch (const json::exception& e) {
          throw ConfigError("synth config is not valid JSON: " + std::string(e.what()));
        }
        sc = SynthConfig::from_json(j);
      }
      if (seed) sc.seed = *seed;
      cmd_synth(sc, output_dir, out);
    } else if (gradcheck->parsed()) {
      const auto f = fault == "drop-cell-carry"  ? nn::BackwardFault::DropCellCarry
                     : fault == "skip-relu-mask" ? nn::BackwardFault::SkipReluMask
                                                 : nn::BackwardFault::None;
      if (!cmd_gradcheck(seeds, f, tolerance, out).passed) return static_cast<int>(ErrorKind::Numeric);
    }
  } catch (const Error& e) {
    err << "flowseq: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "flowseq: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Data);
  }
  return 0;
}

}  // namespace flowseq::cli
