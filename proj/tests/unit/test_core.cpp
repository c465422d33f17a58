#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <stdexcept>

#include "fixtures.hpp"
#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"
#include "texgram/hashing.hpp"
#include "texgram/parallel.hpp"
#include "texgram/tensor.hpp"

namespace fx = texgram::testing;

using namespace texgram;

TEST(Tensor, ShapeAndFill) {
  const Tensor t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.at(1, 2, 3), 1.5f);
  EXPECT_EQ(shape_to_string(t.shape()), "[2,3,4]");
  EXPECT_TRUE(t.all_finite());
}

TEST(Tensor, RejectsDataOfWrongLength) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1.f, 2.f, 3.f}), DataError);
}

TEST(Tensor, ReshapeKeepsDataAndChecksCount) {
  Tensor t({2, 6}, std::vector<float>(12, 2.f));
  t.reshape({3, 2, 2});
  EXPECT_EQ(t.shape(), (Shape{3, 2, 2}));
  EXPECT_THROW(t.reshape({5}), DataError);
}

TEST(Tensor, DetectsNonFinite) {
  Tensor t({3}, 0.f);
  t[1] = std::numeric_limits<float>::infinity();
  EXPECT_FALSE(t.all_finite());
}

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(sha256_hex(std::string("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(std::string()),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  Sha256 h;
  h.update("a").update("bc");
  EXPECT_EQ(h.hex_digest(), sha256_hex(std::string("abc")));
}

TEST(BinaryIo, WriteReadRoundTripAndHeader) {
  fx::TempDir dir;
  std::vector<char> bytes;
  io::RecordHeader header;
  header.magic = {'T', 'E', 'S', 'T'};
  header.version = 1;
  header.field0 = 7;
  header.field1 = 9;
  io::append_header(bytes, header);
  ASSERT_EQ(bytes.size(), 16u);
  io::write_file(dir / "rec.bin", bytes);
  const auto back = io::read_file(dir / "rec.bin");
  EXPECT_EQ(back, bytes);
  const auto parsed = io::parse_header(back, "TEST", dir / "rec.bin");
  EXPECT_EQ(parsed.version, 1u);
  EXPECT_EQ(parsed.field0, 7u);
  EXPECT_EQ(parsed.field1, 9u);
  EXPECT_THROW(io::parse_header(back, "GRAM", dir / "rec.bin"), DataError);
  EXPECT_THROW(io::parse_header(std::span<const char>(back).first(8), "TEST", "x"), DataError);
  EXPECT_THROW(io::read_file(dir / "absent.bin"), DataError);
}

TEST(BinaryIo, FloatsAreLittleEndianFloat32) {
  const std::vector<float> values{1.0f, -2.5f, 3.25f};
  const auto bytes = io::as_bytes(values);
  ASSERT_EQ(bytes.size(), 12u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[3]), 0x3F);  // 1.0f = 0x3F800000
  EXPECT_EQ(io::floats_from_bytes(bytes), values);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (std::size_t workers : {1, 2, 4, 0}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, workers);
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ParallelFor, RethrowsBodyException) {
  EXPECT_THROW(parallel_for(
                   50,
                   [](std::size_t i) {
                     if (i == 17) throw DataError("boom");
                   },
                   3),
               DataError);
  parallel_for(0, [](std::size_t) { FAIL(); });
}
