#include <gtest/gtest.h>

#include <json.hpp>

#include <random>

#include "fixtures.hpp"
#include "texgram/binary_io.hpp"
#include "texgram/engine/bundle.hpp"
#include "texgram/engine/records.hpp"
#include "texgram/error.hpp"
#include "texgram/gram.hpp"
#include "texgram/hashing.hpp"

namespace fx = texgram::testing;

using namespace texgram;
using namespace texgram::engine;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_manifest(const fs::path& dir) { return json::parse(io::read_text(dir / "manifest.json")); }

void write_manifest(const fs::path& dir, const json& manifest) {
  io::write_text(dir / "manifest.json", manifest.dump(2));
}

std::string load_error(const fs::path& dir) {
  try {
    load_model_bundle(dir);
  } catch (const DataError& e) {
    return e.what();
  }
  return "no error";
}

json& node_named(json& manifest, const std::string& name) {
  for (json& n : manifest["nodes"]) {
    if (n["name"] == name) return n;
  }
  throw std::runtime_error("no node " + name);
}

class BundleErrors : public ::testing::Test {
 protected:
  void SetUp() override { save_model_bundle(fx::random_three_layer_net(3), dir_.path()); }
  fx::TempDir dir_;
};

}  // namespace

TEST(Bundle, RoundTripPreservesForward) {
  fx::TempDir dir;
  const NetworkGraph net = fx::mixed_kind_net(1);
  save_model_bundle(net, dir.path());
  const NetworkGraph back = load_model_bundle(dir.path());
  EXPECT_EQ(back.model_name(), net.model_name());
  EXPECT_EQ(back.taps(), net.taps());
  ASSERT_EQ(back.nodes().size(), net.nodes().size());
  std::mt19937_64 rng(1);
  const Tensor image = fx::random_tensor(net.input_spec().shape, rng);
  const auto a = forward_with_taps(net, image);
  const auto b = forward_with_taps(back, image);
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a[t].data, b[t].data);
}

TEST(Bundle, ManifestListsChecksummedBlobs) {
  fx::TempDir dir;
  save_model_bundle(fx::random_two_layer_net(2), dir.path());
  const json m = read_manifest(dir.path());
  EXPECT_EQ(m["format_version"], 1);
  int blobs = 0;
  for (const json& n : m["nodes"]) {
    if (!n.contains("blobs")) continue;
    for (const auto& [role, ref] : n["blobs"].items()) {
      const fs::path file = dir / ref["file"].get<std::string>();
      ASSERT_TRUE(fs::exists(file)) << role;
      EXPECT_EQ(sha256_file(file), ref["sha256"].get<std::string>());
      ++blobs;
    }
  }
  EXPECT_EQ(blobs, 4);
}

TEST(Bundle, AlexNetGeometryTapChannelsAndGramLengths) {
  const json expected = json::parse(io::read_text(fx::data_dir() / "tap_layers.json"))["alexnet"];
  fx::TempDir dir;
  save_model_bundle(fx::alexnet_shaped_net(4), dir.path());
  const NetworkGraph net = load_model_bundle(dir.path());
  EXPECT_EQ(net.taps(), expected["taps"].get<std::vector<std::string>>());
  std::mt19937_64 rng(4);
  const Tensor image = fx::random_tensor({3, 224, 224}, rng);
  const auto taps = forward_with_taps(net, image);
  ASSERT_EQ(taps.size(), 5u);
  const auto channels = expected["channels"].get<std::vector<std::size_t>>();
  const auto lengths = expected["gram_lengths"].get<std::vector<std::size_t>>();
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(taps[t].channels, channels[t]);
    EXPECT_EQ(gram_vector_length(taps[t].channels), lengths[t]);
  }
  EXPECT_EQ(gram_vectorize(gram_matrix(taps[0])).values.size(), 2080u);
}

TEST(Bundle, IdentityConvBundle) {
  fx::TempDir dir;
  save_model_bundle(fx::identity_net(3, 5, 5), dir.path());
  const NetworkGraph net = load_model_bundle(dir.path());
  std::mt19937_64 rng(5);
  const Tensor image = fx::random_tensor({3, 5, 5}, rng);
  EXPECT_EQ(forward_with_taps(net, image)[0].data, image.storage());
}

TEST_F(BundleErrors, MissingManifest) {
  fs::remove(dir_ / "manifest.json");
  EXPECT_NE(load_error(dir_.path()).find("missing manifest"), std::string::npos);
}

TEST_F(BundleErrors, CorruptManifest) {
  io::write_text(dir_ / "manifest.json", "{ not json");
  EXPECT_NE(load_error(dir_.path()).find("corrupt manifest"), std::string::npos);
  json m = json::object();
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("corrupt manifest"), std::string::npos);
}

TEST_F(BundleErrors, BlobOfWrongByteLength) {
  const json m = read_manifest(dir_.path());
  const std::string file = m["nodes"][0]["blobs"]["weight"]["file"];
  auto bytes = io::read_file(dir_ / file);
  bytes.resize(bytes.size() - 4);
  io::write_file(dir_ / file, bytes);
  EXPECT_NE(load_error(dir_.path()).find("shape mismatch"), std::string::npos);
}

TEST_F(BundleErrors, ChecksumMismatch) {
  const json m = read_manifest(dir_.path());
  const std::string file = m["nodes"][0]["blobs"]["weight"]["file"];
  auto bytes = io::read_file(dir_ / file);
  bytes[5] ^= 0x01;
  io::write_file(dir_ / file, bytes);
  EXPECT_NE(load_error(dir_.path()).find("checksum mismatch"), std::string::npos);
}

TEST_F(BundleErrors, ChecksumsAreOptional) {
  json m = read_manifest(dir_.path());
  for (json& n : m["nodes"]) {
    if (!n.contains("blobs")) continue;
    for (auto& [role, ref] : n["blobs"].items()) ref.erase("sha256");
  }
  write_manifest(dir_.path(), m);
  EXPECT_NO_THROW(load_model_bundle(dir_.path()));
}

TEST_F(BundleErrors, UnsupportedVersion) {
  json m = read_manifest(dir_.path());
  m["format_version"] = 2;
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("unsupported bundle format_version"), std::string::npos);
}

TEST_F(BundleErrors, UnknownLayerKind) {
  json m = read_manifest(dir_.path());
  m["nodes"][1]["kind"] = "softmax";
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("unknown layer kind"), std::string::npos);
}

TEST_F(BundleErrors, DanglingInputReference) {
  json m = read_manifest(dir_.path());
  m["nodes"][1]["inputs"] = json::array({"nowhere"});
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("dangling input reference"), std::string::npos);
}

TEST_F(BundleErrors, DuplicateLayerName) {
  json m = read_manifest(dir_.path());
  m["nodes"][1]["name"] = m["nodes"][0]["name"];
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("duplicate layer name"), std::string::npos);
}

TEST_F(BundleErrors, TapThatIsNotALayer) {
  json m = read_manifest(dir_.path());
  m["taps"][0] = "missing_tap";
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("is not a layer"), std::string::npos);
}

TEST_F(BundleErrors, ConvChannelMismatch) {
  json m = read_manifest(dir_.path());
  m["input_spec"]["shape"] = json::array({4, 16, 16});
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("3 x H x W"), std::string::npos);
  m["input_spec"]["shape"] = json::array({3, 16, 16});
  json& conv2 = node_named(m, "conv2");
  conv2["inputs"] = json::array({"input"});
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("channel"), std::string::npos);
}

TEST_F(BundleErrors, NonpositiveOutputExtent) {
  json m = read_manifest(dir_.path());
  m["input_spec"]["shape"] = json::array({3, 1, 1});
  write_manifest(dir_.path(), m);
  EXPECT_NE(load_error(dir_.path()).find("nonpositive output extent"), std::string::npos);
}

TEST(Records, FeatureMapAndTensorRoundTrip) {
  fx::TempDir dir;
  FeatureMap map{"relu1", 3, 4, {}};
  for (int i = 0; i < 12; ++i) map.data.push_back(0.25f * static_cast<float>(i) - 1.0f);
  write_feature_map(dir / "fm.bin", map);
  const auto bytes = io::read_file(dir / "fm.bin");
  ASSERT_EQ(bytes.size(), 16u + 4u * 12u);
  EXPECT_EQ(std::string(bytes.data(), 4), "FMAP");
  const FeatureMap back = read_feature_map(dir / "fm.bin", "relu1");
  EXPECT_EQ(back.channels, 3u);
  EXPECT_EQ(back.samples, 4u);
  EXPECT_EQ(back.data, map.data);

  std::mt19937_64 rng(9);
  const Tensor t = fx::random_tensor({3, 5, 7}, rng);
  write_tensor(dir / "t.bin", t);
  EXPECT_EQ(read_tensor(dir / "t.bin"), t);
  EXPECT_THROW(read_feature_map(dir / "t.bin"), DataError);
}

TEST(Records, GoldenRoundTripAndPerturbation) {
  fx::TempDir dir;
  const NetworkGraph net = fx::random_three_layer_net(12);
  std::mt19937_64 rng(12);
  const Tensor image = fx::random_tensor(net.input_spec().shape, rng);
  write_golden(net, image, dir.path());
  const auto clean = compare_golden(net, dir.path());
  ASSERT_EQ(clean.size(), 5u);
  for (const auto& r : clean) EXPECT_EQ(r.relative_error, 0.0) << r.layer_name;

  // A different network of identical geometry must not reproduce the golden set.
  const auto other = compare_golden(fx::random_three_layer_net(13), dir.path());
  double worst = 0.0;
  for (const auto& r : other) worst = std::max(worst, r.relative_error);
  EXPECT_GT(worst, 1e-3);
}
