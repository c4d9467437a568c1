#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <regex>

#include <CLI11.hpp>
#include <json.hpp>

#include "hda/csv.hpp"
#include "hda/embedding.hpp"
#include "hda/errors.hpp"
#include "hda/log.hpp"
#include "hda/synthetic.hpp"
#include "hda/trainer.hpp"
#include "hda/version.hpp"
#include "settings.hpp"

namespace hda::cli {

namespace fs = std::filesystem;

std::string checkpoint_name(int epoch) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "checkpoint_epoch%03d.hdap", epoch);
  return buf;
}

std::string embeddings_name(int epoch) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "embeddings_epoch%03d.csv", epoch);
  return buf;
}

std::string edge_stats_name(int epoch) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "edge_stats_epoch%03d.csv", epoch);
  return buf;
}

namespace {

std::optional<std::string> env_seed() {
  const char* v = std::getenv("HDA_SEED");
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(what + " '" + path + "' does not exist");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

// --- run settings on the command line -------------------------------------

struct RunOptions {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
  std::string config;
};

void add_run_options(CLI::App& app, RunOptions& ro) {
  app.add_option("--config", ro.config, "key=value config file (flags take precedence)");
  for (const KeySpec& k : run_keys()) {
    if (k.kind == ValueKind::Bool) {
      const bool negated = k.default_value == "true";
      const std::string flag = negated ? (k.negated_flag.empty() ? "no-" + k.name : k.negated_flag)
                                       : k.name;
      const std::string help = negated ? "disable: " + k.help : k.help;
      ro.options[k.name] = app.add_flag("--" + flag, ro.flags[k.name], help);
    } else {
      ro.options[k.name] =
          app.add_option("--" + k.name, ro.values[k.name], k.help + " [" + k.default_value + "]");
    }
  }
}

Settings collect_flags(const RunOptions& ro) {
  Settings out;
  for (const KeySpec& k : run_keys()) {
    const CLI::Option* opt = ro.options.at(k.name);
    if (opt->count() == 0) continue;
    if (k.kind == ValueKind::Bool) {
      out[k.name] = bool_text(k.default_value != "true");
    } else {
      check_value(k, ro.values.at(k.name));
      out[k.name] = ro.values.at(k.name);
    }
  }
  return out;
}

Settings resolve_run_settings(const RunOptions& ro) {
  Settings file;
  if (!ro.config.empty()) {
    file = read_settings_file(ro.config);
  }
  return resolve_settings(env_seed(), file, collect_flags(ro));
}

// --- data -------------------------------------------------------------------

struct RunData {
  Dataset source;
  Dataset target;
  std::optional<EvalLabels> truth;
};

void check_digest(const Settings& s, const std::string& path_key, const std::string& path) {
  const auto it = s.find(path_key + "-digest");
  if (it == s.end() || it->second.empty()) return;
  const std::string actual = file_digest(path);
  if (actual != it->second) {
    throw FormatError(path_key + " file " + path + " has digest " + actual + ", manifest expects " +
                          it->second,
                      0);
  }
}

RunData load_run_data(const Settings& s) {
  const std::string& src = s.at("source");
  const std::string& tgt = s.at("target");
  const std::string& ev = s.at("eval");
  require_file(src, "--source");
  require_file(tgt, "--target");
  check_digest(s, "source", src);
  check_digest(s, "target", tgt);
  RunData d;
  // Each domain is normalized with its own statistics.
  d.source = normalize(read_dataset(src, Domain::Source)).data;
  d.target = normalize(read_dataset(tgt, Domain::Target)).data;
  if (d.source.feature_shape() != d.target.feature_shape()) {
    throw ShapeError("source features are " + shape_string(d.source.feature_shape()) +
                     ", target features are " + shape_string(d.target.feature_shape()));
  }
  if (!ev.empty()) {
    require_file(ev, "--eval");
    check_digest(s, "eval", ev);
    d.truth = read_eval_labels(ev);
    if (d.truth->size() != d.target.size()) {
      throw ShapeError("eval sidecar has " + std::to_string(d.truth->size()) +
                       " labels for " + std::to_string(d.target.size()) + " target samples");
    }
  }
  return d;
}

void check_model_matches(const ModelParams& params, const Dataset& data) {
  if (params.config().input_shape != data.feature_shape()) {
    throw ShapeError("checkpoint expects inputs of shape " +
                     shape_string(params.config().input_shape) + ", data has " +
                     shape_string(data.feature_shape()));
  }
  if (params.config().classes != data.num_classes()) {
    throw ShapeError("checkpoint has " + std::to_string(params.config().classes) +
                     " classes, data has " + std::to_string(data.num_classes()));
  }
}

// --- gen --------------------------------------------------------------------

struct GenArgs {
  std::string out;
  int classes = 2;
  std::size_t per_class = 500;
  std::size_t dim = 2;
  double rotate = 0.0;
  std::string translate;
  double cov_scale = 1.0;
  double radius = 2.0;
  double spread = 1.0;
  std::string axis_scale;
  std::string seed;
  bool force = false;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  if (a.out.empty()) throw UsageError("--out is required");
  if (!fs::is_directory(a.out)) throw UsageError("output directory '" + a.out + "' does not exist");
  const fs::path dir(a.out);
  const fs::path files[] = {dir / "source.hda", dir / "target.hda", dir / "target_eval.hda",
                            dir / "gen_manifest.txt"};
  if (!a.force) {
    for (const fs::path& f : files) {
      if (fs::exists(f)) throw UsageError(f.string() + " exists; pass --force to overwrite");
    }
  }
  std::uint64_t seed = 0;
  if (!a.seed.empty()) {
    seed = parse_u64(a.seed, "--seed");
  } else if (const auto env = env_seed()) {
    seed = parse_u64(*env, "HDA_SEED");
  }

  SyntheticConfig cfg;
  cfg.classes = a.classes;
  cfg.per_class = a.per_class;
  cfg.dim = a.dim;
  cfg.radius = a.radius;
  cfg.spread = a.spread;
  cfg.axis_scale = parse_real_list(a.axis_scale, "--axis-scale");
  cfg.shift.rotation_deg = a.rotate;
  cfg.shift.translation = parse_real_list(a.translate, "--translate");
  cfg.shift.cov_scale = a.cov_scale;

  std::mt19937_64 rng(seed);
  const SyntheticDomains d = gen_synthetic_shift(cfg, rng);
  write_dataset(files[0], d.source);
  write_dataset(files[1], d.target);
  write_eval_labels(files[2], d.target_labels, d.target.feature_shape());

  Settings m;
  m["classes"] = std::to_string(a.classes);
  m["per-class"] = std::to_string(a.per_class);
  m["dim"] = std::to_string(a.dim);
  m["rotate"] = format_real(a.rotate);
  m["translate"] = a.translate;
  m["cov-scale"] = format_real(a.cov_scale);
  m["radius"] = format_real(a.radius);
  m["spread"] = format_real(a.spread);
  m["axis-scale"] = a.axis_scale;
  m["seed"] = std::to_string(seed);
  m["source-digest"] = file_digest(files[0]);
  m["target-digest"] = file_digest(files[1]);
  m["eval-digest"] = file_digest(files[2]);
  m["version"] = kVersion;
  std::ofstream(files[3]) << render_settings(m);

  out << "wrote " << d.source.size() << " source and " << d.target.size()
      << " target samples to " << dir.string() << '\n';
  return kExitOk;
}

// --- train ------------------------------------------------------------------

int cmd_train(const RunOptions& ro, const std::string& out_dir, bool force, std::ostream& out) {
  Settings s = resolve_run_settings(ro);
  const TrainConfig config = to_train_config(s);
  const int every = static_cast<int>(parse_int(s.at("checkpoint-every"), "checkpoint-every"));
  if (out_dir.empty()) throw UsageError("--out is required");

  const RunData data = load_run_data(s);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  if (!force && (fs::exists(dir / "manifest.txt") || fs::exists(dir / "metrics.csv"))) {
    throw UsageError(dir.string() + " already holds a run; pass --force to overwrite");
  }

  Settings manifest = s;
  manifest["source-digest"] = file_digest(s.at("source"));
  manifest["target-digest"] = file_digest(s.at("target"));
  manifest["eval-digest"] = s.at("eval").empty() ? "" : file_digest(s.at("eval"));
  manifest["version"] = kVersion;
  std::ofstream(dir / "manifest.txt") << render_settings(manifest);

  CsvWriter metrics(dir / "metrics.csv",
                    {"epoch", "precision", "accuracy", "l_mmd", "l_g", "l_ce", "l_total",
                     "pseudo_coverage", "edges_right", "edges_wrong", "edges_unknown"});
  CsvWriter losses(dir / "losses.csv",
                   {"step", "l_mmd", "l_g", "l_ce", "l_total", "pseudo_count"});
  CsvWriter edges(dir / "edges.csv", {"epoch", "right", "wrong", "unknown", "total"});
  const fs::path pseudo_path = dir / "pseudo_labels.csv";
  fs::remove(pseudo_path);
  fs::remove(dir / "divergence.txt");

  TrainHooks hooks;
  hooks.on_init = [&](const ModelParams& p) { save_checkpoint(dir / checkpoint_name(0), p); };
  hooks.on_step = [&](const StepRecord& r) {
    losses.row(r.step, r.loss.l_mmd, r.loss.l_g, r.loss.l_ce, r.loss.l_total, r.pseudo_count);
  };
  hooks.on_epoch = [&](const EpochMetrics& m, const ModelParams& p, const PseudoState& pseudo) {
    const std::string prec = m.eval ? format_real(m.eval->precision) : "";
    const std::string acc = m.eval ? format_real(m.eval->accuracy) : "";
    metrics.row(m.epoch, prec, acc, m.mean_loss.l_mmd, m.mean_loss.l_g, m.mean_loss.l_ce,
                m.mean_loss.l_total, m.pseudo_coverage, m.edges.right, m.edges.wrong,
                m.edges.unknown);
    edges.row(m.epoch, m.edges.right, m.edges.wrong, m.edges.unknown, m.edges.total());
    append_pseudo_snapshot(pseudo_path, data.target, pseudo);
    if (m.epoch % every == 0 || m.epoch == config.epochs) {
      save_checkpoint(dir / checkpoint_name(m.epoch), p);
    }
  };

  Diagnostics diag;
  if (data.truth) diag.target_truth = &*data.truth;
  TrainResult result;
  try {
    result = train(config, data.source, data.target, hooks, diag);
  } catch (const DivergenceError& e) {
    std::ofstream(dir / "divergence.txt") << e.what() << '\n' << e.dump();
    throw;
  }

  out << "trained " << config.epochs << " epochs into " << dir.string() << '\n';
  if (!result.history.empty()) {
    const EpochMetrics& last = result.history.back();
    if (last.eval) {
      out << "final precision=" << format_real(last.eval->precision)
          << " accuracy=" << format_real(last.eval->accuracy) << '\n';
    }
    out << "pseudo coverage=" << format_real(last.pseudo_coverage) << '\n';
  }
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string target;
  std::string eval;
  std::string csv;
  int positive_class = 1;
  std::string precision = "f64";
  bool json = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "--checkpoint");
  require_file(a.target, "--target");
  require_file(a.eval, "--eval");
  const ModelParams params = load_checkpoint(a.checkpoint);
  const Dataset target = normalize(read_dataset(a.target, Domain::Target)).data;
  const EvalLabels truth = read_eval_labels(a.eval);
  check_model_matches(params, target);
  if (truth.size() != target.size()) {
    throw ShapeError("eval sidecar has " + std::to_string(truth.size()) + " labels for " +
                     std::to_string(target.size()) + " target samples");
  }
  const Precision precision = a.precision == "f32" ? Precision::f32 : Precision::f64;
  const EvalMetrics m = evaluate(params, target, truth, a.positive_class, precision);

  const fs::path csv =
      a.csv.empty() ? fs::path(a.checkpoint).parent_path() / "eval.csv" : fs::path(a.csv);
  CsvWriter writer(csv,
                   {"checkpoint", "precision", "accuracy", "tp", "fp", "fn", "tn",
                    "precision_undefined"},
                   CsvWriter::Mode::Append);
  writer.row(a.checkpoint, m.precision, m.accuracy, m.tp, m.fp, m.fn, m.tn,
             bool_text(m.precision_undefined));

  if (a.json) {
    nlohmann::json j;
    j["checkpoint"] = a.checkpoint;
    j["precision"] = m.precision;
    j["accuracy"] = m.accuracy;
    j["precision_undefined"] = m.precision_undefined;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["tn"] = m.tn;
    j["confusion"] = m.confusion;
    j["positive_class"] = a.positive_class;
    out << j.dump() << '\n';
  } else {
    out << "precision=" << format_real(m.precision) << " accuracy=" << format_real(m.accuracy)
        << " tp=" << m.tp << " fp=" << m.fp << " fn=" << m.fn << " tn=" << m.tn
        << (m.precision_undefined ? " (precision undefined: no positive predictions)" : "")
        << '\n';
  }
  return kExitOk;
}

// --- export -----------------------------------------------------------------

int epoch_from_name(const std::string& path) {
  static const std::regex re("epoch([0-9]+)");
  std::smatch match;
  const std::string name = fs::path(path).filename().string();
  if (!std::regex_search(name, match, re)) {
    throw UsageError("cannot infer the epoch from '" + name + "'; pass --epoch");
  }
  return static_cast<int>(parse_int(match[1].str(), "epoch"));
}

int cmd_export(const RunOptions& ro, const std::string& checkpoint, const std::string& out_dir,
               const std::string& epoch_arg, std::ostream& out) {
  const Settings s = resolve_run_settings(ro);
  const TrainConfig config = to_train_config(s);
  require_file(checkpoint, "--checkpoint");
  if (out_dir.empty()) throw UsageError("--out is required");
  if (!fs::is_directory(out_dir)) {
    throw UsageError("output directory '" + out_dir + "' does not exist");
  }
  const int epoch = epoch_arg.empty() ? epoch_from_name(checkpoint)
                                      : static_cast<int>(parse_int(epoch_arg, "--epoch"));

  const ModelParams params = load_checkpoint(checkpoint);
  const RunData data = load_run_data(s);
  check_model_matches(params, data.source);

  PseudoOptions popts;
  popts.epsilon = config.epsilon;
  popts.precision = config.precision;
  const PseudoState pseudo = assign_pseudo_labels(data.target, params, epoch, popts);

  const fs::path dir(out_dir);
  export_embeddings(dir / embeddings_name(epoch), params, data.source, data.target, &pseudo,
                    epoch, config.precision);
  const std::vector<int>& edge_labels = data.truth ? data.truth->labels() : pseudo.labels;
  const EdgeStats stats = measure_edges(params, data.source, data.target, edge_labels, config);
  CsvWriter edges(dir / edge_stats_name(epoch), {"epoch", "right", "wrong", "unknown", "total"});
  edges.row(epoch, stats.right, stats.wrong, stats.unknown, stats.total());

  out << "exported epoch " << epoch << " (" << data.source.size() + data.target.size()
      << " samples) to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain adaptation with MMD alignment, a threshold-graph layer and pseudo labels",
               "hda"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenArgs gen;
  CLI::App* g = app.add_subcommand("gen", "generate a synthetic source/target pair");
  g->add_option("--out", gen.out, "existing output directory")->required();
  g->add_option("--classes", gen.classes, "number of classes")->check(CLI::PositiveNumber);
  g->add_option("--per-class", gen.per_class, "samples per class and domain");
  g->add_option("--dim", gen.dim, "feature dimension")->check(CLI::Range(2, 1 << 20));
  g->add_option("--rotate", gen.rotate, "target rotation in degrees");
  g->add_option("--translate", gen.translate, "target translation, comma separated");
  g->add_option("--cov-scale", gen.cov_scale, "target spread multiplier");
  g->add_option("--radius", gen.radius, "distance of class means from the origin");
  g->add_option("--spread", gen.spread, "within-class standard deviation");
  g->add_option("--axis-scale", gen.axis_scale, "per-dimension spread multipliers");
  g->add_option("--seed", gen.seed, "generator seed (default: HDA_SEED, then 0)");
  g->add_flag("--force", gen.force, "overwrite existing files");

  RunOptions train_opts;
  std::string train_out;
  bool train_force = false;
  CLI::App* t = app.add_subcommand("train", "train on a source/target pair");
  add_run_options(*t, train_opts);
  t->add_option("--out", train_out, "run directory (created if missing)")->required();
  t->add_flag("--force", train_force, "overwrite an existing run");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "score a checkpoint on labelled target data");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  e->add_option("--target", ev.target, "target dataset file")->required();
  e->add_option("--eval", ev.eval, "eval-label sidecar")->required();
  e->add_option("--csv", ev.csv, "CSV to append to (default: eval.csv next to the checkpoint)");
  e->add_option("--positive-class", ev.positive_class, "class scored by precision");
  e->add_option("--precision", ev.precision, "arithmetic precision")
      ->check(CLI::IsMember({"f32", "f64"}));
  e->add_flag("--json", ev.json, "print a JSON object");

  RunOptions export_opts;
  std::string export_checkpoint;
  std::string export_out;
  std::string export_epoch;
  CLI::App* x = app.add_subcommand("export", "write embeddings and edge statistics");
  add_run_options(*x, export_opts);
  x->add_option("--checkpoint", export_checkpoint, "checkpoint file")->required();
  x->add_option("--out", export_out, "existing output directory")->required();
  x->add_option("--epoch", export_epoch, "epoch label (default: parsed from the file name)");

  std::vector<std::string> argv_store{"hda"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (t->parsed()) return cmd_train(train_opts, train_out, train_force, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (x->parsed()) return cmd_export(export_opts, export_checkpoint, export_out, export_epoch, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& ex) {
    err << "format error: " << ex.what() << " (byte offset " << ex.offset() << ")\n";
    return kExitFormat;
  } catch (const ShapeError& ex) {
    err << "shape error: " << ex.what() << '\n';
    return kExitFormat;
  } catch (const DivergenceError& ex) {
    err << "diverged: " << ex.what() << '\n';
    return kExitDivergence;
  } catch (const ContractError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace hda::cli
