#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hda::cli {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string checkpoint_name(int epoch);
std::string embeddings_name(int epoch);
std::string edge_stats_name(int epoch);

}  // namespace hda::cli
