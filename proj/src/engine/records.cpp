#include "texgram/engine/records.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"

namespace texgram::engine {

namespace fs = std::filesystem;
using nlohmann::json;

void write_feature_map(const fs::path& path, const FeatureMap& map) {
  map.validate();
  std::vector<char> out;
  io::append_header(out, {{'F', 'M', 'A', 'P'}, 1, static_cast<std::uint32_t>(map.channels),
                          static_cast<std::uint32_t>(map.samples)});
  const auto body = io::as_bytes(std::span<const float>(map.data));
  out.insert(out.end(), body.begin(), body.end());
  io::write_file(path, out);
}

FeatureMap read_feature_map(const fs::path& path, std::string layer_name) {
  const auto bytes = io::read_file(path);
  const auto h = io::parse_header(bytes, "FMAP", path);
  if (h.version != 1) throw DataError("unsupported feature map version in " + path.string());
  FeatureMap map{std::move(layer_name), h.field0, h.field1,
                 io::floats_from_bytes(std::span<const char>(bytes).subspan(16))};
  map.validate();
  return map;
}

void write_tensor(const fs::path& path, const Tensor& tensor) {
  std::vector<char> out;
  io::append_header(out, {{'T', 'N', 'S', 'R'}, 1, static_cast<std::uint32_t>(tensor.rank()), 0});
  for (std::size_t e : tensor.shape()) {
    const auto v = static_cast<std::uint32_t>(e);
    const auto* c = reinterpret_cast<const char*>(&v);
    out.insert(out.end(), c, c + 4);
  }
  const auto body = io::as_bytes(tensor.data());
  out.insert(out.end(), body.begin(), body.end());
  io::write_file(path, out);
}

Tensor read_tensor(const fs::path& path) {
  const auto bytes = io::read_file(path);
  const auto h = io::parse_header(bytes, "TNSR", path);
  if (h.version != 1) throw DataError("unsupported tensor version in " + path.string());
  const std::size_t rank = h.field0;
  if (bytes.size() < 16 + 4 * rank) throw DataError("truncated tensor record " + path.string());
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    std::uint32_t v = 0;
    std::memcpy(&v, bytes.data() + 16 + 4 * i, 4);
    shape[i] = v;
  }
  const auto body = std::span<const char>(bytes).subspan(16 + 4 * rank);
  if (body.size() != 4 * shape_product(shape)) {
    throw DataError("shape mismatch in tensor record " + path.string());
  }
  return Tensor(std::move(shape), io::floats_from_bytes(body));
}

void write_golden(const NetworkGraph& net, const Tensor& image, const fs::path& dir) {
  fs::create_directories(dir);
  write_tensor(dir / "input.tnsr", image);
  const auto taps = forward_with_taps(net, image);
  json tap_list = json::array();
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const std::string file = "tap_" + std::to_string(t) + ".fmap";
    write_feature_map(dir / file, taps[t]);
    tap_list.push_back({{"name", taps[t].layer_name}, {"file", file}});
  }
  json manifest{{"model_name", net.model_name()}, {"input", "input.tnsr"}, {"taps", tap_list}};
  io::write_text(dir / "golden.json", manifest.dump(2) + "\n");
}

std::vector<GoldenTapResult> compare_golden(const NetworkGraph& net, const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(io::read_text(dir / "golden.json"));
  } catch (const json::exception& e) {
    throw DataError("corrupt golden manifest in " + dir.string() + ": " + e.what());
  }
  const Tensor input = read_tensor(dir / manifest.at("input").get<std::string>());
  const json& golden_taps = manifest.at("taps");
  if (golden_taps.size() != net.taps().size()) {
    throw DataError("golden directory has " + std::to_string(golden_taps.size()) +
                    " taps, network has " + std::to_string(net.taps().size()));
  }
  const auto taps = forward_with_taps(net, input);

  std::vector<GoldenTapResult> results;
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const auto golden = read_feature_map(dir / golden_taps[t].at("file").get<std::string>(),
                                         golden_taps[t].at("name").get<std::string>());
    if (golden.channels != taps[t].channels || golden.samples != taps[t].samples) {
      throw DataError("golden tap '" + golden.layer_name + "' shape differs from engine tap '" +
                      taps[t].layer_name + "'");
    }
    double max_err = 0.0;
    double max_ref = 0.0;
    for (std::size_t i = 0; i < golden.data.size(); ++i) {
      max_err = std::max(max_err, std::abs(double(taps[t].data[i]) - golden.data[i]));
      max_ref = std::max(max_ref, std::abs(double(golden.data[i])));
    }
    results.push_back({taps[t].layer_name, taps[t].channels, max_err,
                       max_ref > 0 ? max_err / max_ref : max_err});
  }
  return results;
}

}  // namespace texgram::engine
