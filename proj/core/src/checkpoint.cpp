#include <string>
#include <utility>
#include <vector>

#include "binary_io.hpp"
#include "hda/errors.hpp"
#include "hda/model.hpp"

namespace hda {
namespace {

constexpr char kMagic[4] = {'H', 'D', 'A', 'P'};
constexpr std::uint32_t kMaxRank = 8;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::vector<std::pair<std::string, const Dense*>> table;
  Dense input_shape({params.config().input_shape.size()});
  for (std::size_t i = 0; i < input_shape.size(); ++i) {
    input_shape.data[i] = static_cast<double>(params.config().input_shape[i]);
  }
  table.emplace_back("config.input_shape", &input_shape);
  for (const Parameter* p : params.parameters()) table.emplace_back(p->name, &p->value);

  std::string out(kMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& [name, d] : table) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_u32(out, static_cast<std::uint32_t>(d->rank()));
    for (std::size_t dim : d->shape) detail::put_u32(out, static_cast<std::uint32_t>(dim));
  }
  for (const auto& [name, d] : table) {
    for (double v : d->data) detail::put_f64(out, v);
  }
  detail::write_file(path, out);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  detail::Reader r(detail::read_file(path));
  if (r.remaining() < 4 || r.bytes().compare(0, 4, kMagic, 4) != 0) {
    throw FormatError("bad magic in checkpoint " + path.string() + " (expected HDAP)", 0);
  }
  r.u32("magic");
  const std::size_t version_at = r.pos();
  if (const std::uint32_t v = r.u32("version"); v != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(v), version_at);
  }
  const std::uint32_t count = r.u32("tensor count");
  std::vector<std::pair<std::string, Dense>> tensors;
  std::size_t payload = 0;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t len = r.u32("name length");
    std::string name = r.str(len, "tensor name");
    const std::size_t rank_at = r.pos();
    const std::uint32_t rank = r.u32("rank");
    if (rank > kMaxRank) throw FormatError("implausible tensor rank", rank_at);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u32("dimension"));
    payload += shape_size(shape);
    tensors.emplace_back(std::move(name), Dense(std::move(shape)));
  }
  if (r.remaining() != payload * 8) {
    throw FormatError("checkpoint payload holds " + std::to_string(r.remaining()) +
                          " bytes, table declares " + std::to_string(payload * 8),
                      r.pos());
  }
  for (auto& [name, d] : tensors) {
    for (double& v : d.data) v = r.f64("value");
  }
  return ModelParams::from_tensors(tensors);
}

}  // namespace hda
