#include "texgram/engine/bundle.hpp"

#include <json.hpp>

#include <map>
#include <string>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"
#include "texgram/hashing.hpp"

namespace texgram::engine {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Pair read_pair(const json& params, const char* key, Pair fallback) {
  if (!params.contains(key)) return fallback;
  const json& v = params.at(key);
  if (v.is_number_unsigned()) return {v.get<std::size_t>(), v.get<std::size_t>()};
  if (v.is_array() && v.size() == 2) return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  throw DataError(std::string("parameter '") + key + "' must be an integer or a pair");
}

Tensor read_blob(const fs::path& dir, const json& node, const std::string& role, bool required) {
  const std::string name = node.at("name").get<std::string>();
  if (!node.contains("blobs") || !node.at("blobs").contains(role)) {
    if (required) throw DataError("layer '" + name + "' is missing blob '" + role + "'");
    return {};
  }
  const json& ref = node.at("blobs").at(role);
  const fs::path file = dir / ref.at("file").get<std::string>();
  const Shape shape = ref.at("shape").get<Shape>();
  if (!fs::exists(file)) throw DataError("blob file missing: " + file.string());
  const auto bytes = io::read_file(file);
  const std::size_t expected = 4 * shape_product(shape);
  if (bytes.size() != expected) {
    throw DataError("shape mismatch: blob " + file.filename().string() + " has " +
                    std::to_string(bytes.size()) + " bytes, manifest shape " +
                    shape_to_string(shape) + " needs " + std::to_string(expected));
  }
  if (ref.contains("sha256")) {
    const auto actual = sha256_hex(std::span<const char>(bytes));
    if (actual != ref.at("sha256").get<std::string>()) {
      throw DataError("checksum mismatch for blob " + file.filename().string());
    }
  }
  return Tensor(shape, io::floats_from_bytes(bytes));
}

LayerNode parse_node(const fs::path& dir, const json& j) {
  LayerNode node;
  node.name = j.at("name").get<std::string>();
  node.kind = parse_layer_kind(j.at("kind").get<std::string>());
  node.inputs = j.value("inputs", std::vector<std::string>{});
  const json params = j.value("params", json::object());
  switch (node.kind) {
    case LayerKind::kConv2d: {
      Conv2dParams p;
      p.stride = read_pair(params, "stride", {1, 1});
      p.padding = read_pair(params, "padding", {0, 0});
      p.weight = read_blob(dir, j, "weight", true);
      p.bias = read_blob(dir, j, "bias", false);
      node.params = std::move(p);
      break;
    }
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      PoolParams p;
      if (!params.contains("kernel")) {
        throw DataError("layer '" + node.name + "' is missing parameter 'kernel'");
      }
      p.kernel = read_pair(params, "kernel", {});
      p.stride = read_pair(params, "stride", p.kernel);
      p.padding = read_pair(params, "padding", {0, 0});
      node.params = p;
      break;
    }
    case LayerKind::kBatchNorm: {
      BatchNormParams p;
      p.epsilon = params.value("eps", 1e-5);
      p.mean = read_blob(dir, j, "running_mean", true);
      p.variance = read_blob(dir, j, "running_var", true);
      p.scale = read_blob(dir, j, "weight", true);
      p.shift = read_blob(dir, j, "bias", true);
      node.params = std::move(p);
      break;
    }
    default:
      break;
  }
  return node;
}

std::string blob_file_name(const std::string& node, const std::string& role) {
  std::string out;
  for (char c : node) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out + "." + role + ".bin";
}

json write_blob(const fs::path& dir, const std::string& node, const std::string& role,
                const Tensor& t) {
  const std::string file = blob_file_name(node, role);
  const auto bytes = io::as_bytes(t.data());
  io::write_file(dir / file, bytes);
  return {{"file", file}, {"shape", t.shape()}, {"sha256", sha256_hex(bytes)}};
}

json pair_json(Pair p) { return json::array({p.h, p.w}); }

}  // namespace

NetworkGraph load_model_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw DataError("missing manifest: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(io::read_text(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("corrupt manifest " + manifest_path.string() + ": " + e.what());
  }

  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kBundleFormatVersion) {
      throw DataError("unsupported bundle format_version " + std::to_string(version));
    }
    InputSpec spec;
    const json& in = manifest.at("input_spec");
    spec.shape = in.at("shape").get<Shape>();
    spec.mean = in.at("mean").get<std::array<float, 3>>();
    spec.std = in.at("std").get<std::array<float, 3>>();

    std::vector<LayerNode> nodes;
    for (const json& j : manifest.at("nodes")) nodes.push_back(parse_node(dir, j));
    return NetworkGraph(manifest.at("model_name").get<std::string>(), std::move(spec),
                        std::move(nodes), manifest.at("taps").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw DataError("corrupt manifest " + manifest_path.string() + ": " + e.what());
  }
}

void save_model_bundle(const NetworkGraph& net, const fs::path& dir) {
  fs::create_directories(dir);
  json nodes = json::array();
  for (const LayerNode& node : net.nodes()) {
    json j{{"name", node.name}, {"kind", std::string(to_string(node.kind))},
           {"inputs", node.inputs}};
    json params = json::object();
    json blobs = json::object();
    if (const auto* p = std::get_if<Conv2dParams>(&node.params)) {
      params["stride"] = pair_json(p->stride);
      params["padding"] = pair_json(p->padding);
      blobs["weight"] = write_blob(dir, node.name, "weight", p->weight);
      if (!p->bias.empty()) blobs["bias"] = write_blob(dir, node.name, "bias", p->bias);
    } else if (const auto* q = std::get_if<PoolParams>(&node.params)) {
      params["kernel"] = pair_json(q->kernel);
      params["stride"] = pair_json(q->stride);
      params["padding"] = pair_json(q->padding);
    } else if (const auto* b = std::get_if<BatchNormParams>(&node.params)) {
      params["eps"] = b->epsilon;
      blobs["running_mean"] = write_blob(dir, node.name, "running_mean", b->mean);
      blobs["running_var"] = write_blob(dir, node.name, "running_var", b->variance);
      blobs["weight"] = write_blob(dir, node.name, "weight", b->scale);
      blobs["bias"] = write_blob(dir, node.name, "bias", b->shift);
    }
    if (!params.empty()) j["params"] = params;
    if (!blobs.empty()) j["blobs"] = blobs;
    nodes.push_back(std::move(j));
  }
  const auto& spec = net.input_spec();
  json manifest{{"format_version", kBundleFormatVersion},
                {"model_name", net.model_name()},
                {"input_spec", {{"shape", spec.shape}, {"mean", spec.mean}, {"std", spec.std}}},
                {"nodes", std::move(nodes)},
                {"taps", net.taps()}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace texgram::engine
