#include "hda/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace hda {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format real");
  return std::string(buf, end);
}

namespace {

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    line += fields[i];
  }
  return line;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header,
                     Mode mode) {
  const std::string head = join(header);
  bool write_header = true;
  if (mode == Mode::Append && std::filesystem::exists(path) &&
      std::filesystem::file_size(path) > 0) {
    std::ifstream in(path);
    std::string existing;
    std::getline(in, existing);
    if (existing != head) {
      throw std::runtime_error("CSV header of " + path.string() + " is '" + existing +
                               "', expected '" + head + "'");
    }
    write_header = false;
  }
  out_.open(path, mode == Mode::Append ? std::ios::app : std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (write_header) out_ << head << '\n';
}

void CsvWriter::row_fields(const std::vector<std::string>& fields) {
  out_ << join(fields) << '\n';
  out_.flush();
}

}  // namespace hda
