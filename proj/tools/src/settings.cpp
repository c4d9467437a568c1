#include "settings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hda/csv.hpp"

namespace hda::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v[i]);
  }
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<KeySpec> build_keys() {
  const TrainConfig d;
  using K = ValueKind;
  return {
      {"source", "", K::Path, "source dataset file"},
      {"target", "", K::Path, "target dataset file (unlabelled)"},
      {"eval", "", K::Path, "target eval-label sidecar, diagnostics only"},
      {"lr", format_real(d.learning_rate), K::Real, "Adam learning rate"},
      {"weight-decay", format_real(d.weight_decay), K::Real, "coupled L2 weight decay"},
      {"batch", std::to_string(d.batch_size), K::Int, "batch size, split evenly between domains"},
      {"epochs", std::to_string(d.epochs), K::Int, "training epochs"},
      {"threshold-mode", "fixed", K::Choice, "graph threshold mode", {"fixed", "percentile"}},
      {"threshold", format_real(d.threshold), K::Real, "fixed graph distance threshold T"},
      {"threshold-percentile", format_real(d.threshold_percentile), K::Real,
       "percentile of batch pair distances used as T in percentile mode"},
      {"graph-on-relu", "false", K::Bool, "build the graph on ReLU(phi)"},
      {"epsilon", format_real(d.epsilon), K::Real, "pseudo-label confidence threshold"},
      {"margin", format_real(d.margin), K::Real, "contrastive margin on squared distance"},
      {"bandwidth-multipliers", join_reals(d.bandwidth_multipliers), K::RealList,
       "MMD bandwidths as multiples of the median pair distance"},
      {"backbone-hidden", join_sizes(d.backbone_hidden), K::IntList,
       "hidden widths of the MLP backbone"},
      {"conv-channels", join_sizes(d.conv_channels), K::IntList,
       "channels of the two conv layers (image inputs)"},
      {"phi-dim", std::to_string(d.phi_dim), K::Int, "backbone feature width"},
      {"hidden", std::to_string(d.hidden), K::Int, "FC1 / graph layer width"},
      {"seed", std::to_string(d.seed), K::Int, "run seed"},
      {"precision", "f64", K::Choice, "arithmetic precision", {"f32", "f64"}},
      {"gnn", "true", K::Bool, "use the graph layer during training", {}, "no-gnn"},
      {"w-mmd", format_real(d.weights.mmd), K::Real, "weight of the MMD term"},
      {"w-feature", format_real(d.weights.feature), K::Real, "weight of the feature loss"},
      {"w-ce", format_real(d.weights.ce), K::Real, "weight of the cross-entropy term"},
      {"pseudo-labels", "true", K::Bool, "pseudo-label target samples", {}, "no-pseudo"},
      {"pseudo-refresh", "epoch", K::Choice, "pseudo-label refresh cadence", {"epoch", "batch"}},
      {"sticky-pseudo", "false", K::Bool, "never revoke an assigned pseudo label"},
      {"warmup-epochs", std::to_string(d.warmup_epochs), K::Int,
       "epochs before pseudo labelling starts"},
      {"augment", "true", K::Bool, "augment image inputs", {}, "no-augment"},
      {"feature-loss-input", "gnn", K::Choice, "features fed to the contrastive loss",
       {"gnn", "backbone"}},
      {"positive-class", std::to_string(d.positive_class), K::Int, "class scored by precision"},
      {"checkpoint-every", "10", K::Int, "epochs between checkpoints"},
  };
}

const char* kManifestOnly[] = {"source-digest", "target-digest", "eval-digest", "version"};

}  // namespace

const std::vector<KeySpec>& run_keys() {
  static const std::vector<KeySpec> keys = build_keys();
  return keys;
}

const KeySpec* find_key(std::string_view name) {
  for (const KeySpec& k : run_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

bool is_manifest_only_key(std::string_view name) {
  for (const char* k : kManifestOnly) {
    if (name == k) return true;
  }
  return false;
}

Settings run_defaults() {
  Settings s;
  for (const KeySpec& k : run_keys()) s[k.name] = k.default_value;
  return s;
}

double parse_real(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw UsageError(std::string(what) + ": '" + t + "' is not a number");
  }
  return v;
}

long long parse_int(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw UsageError(std::string(what) + ": '" + t + "' is not an integer");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw UsageError(std::string(what) + ": '" + t + "' is not an unsigned integer");
  }
  return v;
}

std::vector<double> parse_real_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) out.push_back(parse_real(item, what));
  return out;
}

void check_value(const KeySpec& key, const std::string& value) {
  switch (key.kind) {
    case ValueKind::Real:
      parse_real(value, key.name);
      break;
    case ValueKind::Int:
      if (key.name == "seed") {
        parse_u64(value, key.name);
      } else {
        parse_int(value, key.name);
      }
      break;
    case ValueKind::Bool:
      if (value != "true" && value != "false") {
        throw UsageError(key.name + ": expected true or false, got '" + value + "'");
      }
      break;
    case ValueKind::Choice: {
      for (const std::string& c : key.choices) {
        if (c == value) return;
      }
      std::string all;
      for (const std::string& c : key.choices) all += (all.empty() ? "" : "|") + c;
      throw UsageError(key.name + ": expected one of " + all + ", got '" + value + "'");
    }
    case ValueKind::RealList:
      parse_real_list(value, key.name);
      break;
    case ValueKind::IntList:
      for (const std::string& item : split_list(value)) {
        if (parse_int(item, key.name) <= 0) throw UsageError(key.name + ": widths must be positive");
      }
      break;
    case ValueKind::Path:
    case ValueKind::Text:
      break;
  }
}

Settings parse_settings(std::string_view text, const std::string& origin) {
  Settings out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const std::string_view raw =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected key=value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const KeySpec* spec = find_key(key);
    if (!spec && !is_manifest_only_key(key)) throw UsageError(where + ": unknown key '" + key + "'");
    if (out.count(key)) throw UsageError(where + ": duplicate key '" + key + "'");
    if (spec) {
      try {
        check_value(*spec, value);
      } catch (const UsageError& e) {
        throw UsageError(where + ": " + e.what());
      }
    }
    out[key] = value;
  }
  return out;
}

Settings read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path.string());
}

std::string render_settings(const Settings& settings) {
  std::string out;
  for (const auto& [k, v] : settings) out += k + "=" + v + "\n";
  return out;
}

namespace {

// Within one layer, asking for a percentile without naming a mode selects
// percentile mode.
void apply_layer(Settings& s, const Settings& layer) {
  for (const auto& [k, v] : layer) s[k] = v;
  if (layer.count("threshold-percentile") && !layer.count("threshold-mode")) {
    s["threshold-mode"] = "percentile";
  }
}

}  // namespace

Settings resolve_settings(const std::optional<std::string>& env_seed, const Settings& file,
                          const Settings& flags) {
  Settings s = run_defaults();
  if (env_seed) {
    parse_u64(*env_seed, "HDA_SEED");
    s["seed"] = trim(*env_seed);
  }
  apply_layer(s, file);
  apply_layer(s, flags);
  return s;
}

TrainConfig to_train_config(const Settings& s) {
  auto get = [&](const std::string& k) -> const std::string& {
    const auto it = s.find(k);
    if (it == s.end()) throw UsageError("missing setting '" + k + "'");
    return it->second;
  };
  auto real = [&](const std::string& k) { return parse_real(get(k), k); };
  auto integer = [&](const std::string& k) { return parse_int(get(k), k); };
  auto boolean = [&](const std::string& k) { return get(k) == "true"; };
  auto sizes = [&](const std::string& k) {
    std::vector<std::size_t> out;
    for (const std::string& item : split_list(get(k))) {
      const long long v = parse_int(item, k);
      if (v <= 0) throw UsageError(k + ": widths must be positive");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  };
  auto non_negative = [&](const std::string& k) {
    const long long v = integer(k);
    if (v < 0) throw UsageError(k + " must be non-negative");
    return v;
  };

  TrainConfig c;
  c.learning_rate = real("lr");
  c.weight_decay = real("weight-decay");
  c.batch_size = static_cast<std::size_t>(non_negative("batch"));
  c.epochs = static_cast<int>(non_negative("epochs"));
  c.threshold_mode = get("threshold-mode") == "percentile" ? ThresholdMode::Percentile
                                                            : ThresholdMode::Fixed;
  c.threshold = real("threshold");
  c.threshold_percentile = real("threshold-percentile");
  c.graph_on_relu = boolean("graph-on-relu");
  c.epsilon = real("epsilon");
  c.margin = real("margin");
  c.bandwidth_multipliers = parse_real_list(get("bandwidth-multipliers"), "bandwidth-multipliers");
  c.backbone_hidden = sizes("backbone-hidden");
  c.conv_channels = sizes("conv-channels");
  c.phi_dim = static_cast<std::size_t>(non_negative("phi-dim"));
  c.hidden = static_cast<std::size_t>(non_negative("hidden"));
  c.seed = parse_u64(get("seed"), "seed");
  c.precision = get("precision") == "f32" ? Precision::f32 : Precision::f64;
  c.use_gnn = boolean("gnn");
  c.weights.mmd = real("w-mmd");
  c.weights.feature = real("w-feature");
  c.weights.ce = real("w-ce");
  c.pseudo_labels = boolean("pseudo-labels");
  c.pseudo_refresh = get("pseudo-refresh") == "batch" ? PseudoRefresh::Batch : PseudoRefresh::Epoch;
  c.sticky_pseudo = boolean("sticky-pseudo");
  c.warmup_epochs = static_cast<int>(non_negative("warmup-epochs"));
  c.augment = boolean("augment");
  c.feature_loss_input =
      get("feature-loss-input") == "backbone" ? FeatureLossInput::Backbone : FeatureLossInput::Gnn;
  c.positive_class = static_cast<int>(integer("positive-class"));

  if (c.batch_size < 2 || c.batch_size % 2 != 0) {
    throw UsageError("batch must be an even number of at least 2");
  }
  if (!(c.learning_rate > 0.0)) throw UsageError("lr must be positive");
  if (c.weight_decay < 0.0) throw UsageError("weight-decay must be non-negative");
  if (c.threshold_mode == ThresholdMode::Fixed && !(c.threshold > 0.0)) {
    throw UsageError("threshold must be positive");
  }
  if (c.threshold_percentile < 0.0 || c.threshold_percentile > 100.0) {
    throw UsageError("threshold-percentile must lie in [0, 100]");
  }
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw UsageError("epsilon must lie in (0, 1)");
  if (c.bandwidth_multipliers.empty()) throw UsageError("bandwidth-multipliers is empty");
  for (double m : c.bandwidth_multipliers) {
    if (!(m > 0.0)) throw UsageError("bandwidth multipliers must be positive");
  }
  if (c.phi_dim == 0 || c.hidden == 0) throw UsageError("phi-dim and hidden must be positive");
  if (integer("checkpoint-every") < 1) throw UsageError("checkpoint-every must be at least 1");
  return c;
}

}  // namespace hda::cli
