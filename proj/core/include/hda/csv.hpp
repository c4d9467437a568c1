#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace hda {

/// Shortest decimal form that reads back to the same double.
std::string format_real(double v);

/// Minimal CSV writer with a fixed header. In Append mode the header is
/// written only when the file is new or empty, and an existing header must
/// match exactly.
class CsvWriter {
 public:
  enum class Mode { Truncate, Append };

  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header,
            Mode mode = Mode::Truncate);

  template <typename... Ts>
  void row(const Ts&... values) {
    std::string line;
    bool first = true;
    ((append_field(line, first, values)), ...);
    line.push_back('\n');
    out_ << line;
    out_.flush();
  }

  void row_fields(const std::vector<std::string>& fields);

 private:
  template <typename T>
  static void append_field(std::string& line, bool& first, const T& v) {
    if (!first) line.push_back(',');
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      line += format_real(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      line += std::to_string(v);
    } else {
      line += std::string_view(v);
    }
  }

  std::ofstream out_;
};

}  // namespace hda
