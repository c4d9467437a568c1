#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hda/trainer.hpp"

namespace hda::cli {

/// Bad flags, bad config values, refused overwrites. Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitDivergence = 4;

/// Flat key=value settings, ordered by key so rendering is stable.
using Settings = std::map<std::string, std::string>;

enum class ValueKind { Real, Int, Bool, Choice, RealList, IntList, Path, Text };

struct KeySpec {
  std::string name;
  std::string default_value;
  ValueKind kind;
  std::string help;
  std::vector<std::string> choices{};  // Choice only
  // Bool keys are set from the command line by a bare flag. For keys that
  // default to true the flag is "--no-<name>" (or `negated_flag`).
  std::string negated_flag{};
};

/// Every key accepted by `train` and `export`, in display order.
const std::vector<KeySpec>& run_keys();
const KeySpec* find_key(std::string_view name);

/// Keys that only appear in manifests and are checked, never applied.
bool is_manifest_only_key(std::string_view name);

Settings run_defaults();

/// Parses "key=value" lines. Blank lines and lines starting with '#' are
/// skipped. Unknown keys, duplicates and malformed lines are usage errors.
Settings parse_settings(std::string_view text, const std::string& origin);
Settings read_settings_file(const std::filesystem::path& path);

/// One "key=value" line per entry.
std::string render_settings(const Settings& settings);

/// Validates one value against its key's kind; throws UsageError.
void check_value(const KeySpec& key, const std::string& value);

/// Layers in precedence order: defaults, HDA_SEED, config file, flags.
Settings resolve_settings(const std::optional<std::string>& env_seed,
                          const Settings& file, const Settings& flags);

TrainConfig to_train_config(const Settings& settings);

double parse_real(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
std::uint64_t parse_u64(std::string_view text, std::string_view what);
std::vector<double> parse_real_list(std::string_view text, std::string_view what);

}  // namespace hda::cli
