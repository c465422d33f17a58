#include "texgram/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "texgram/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace texgram::io {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const char>(text.data(), text.size()));
}

std::vector<float> floats_from_bytes(std::span<const char> bytes) {
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(float));
  return out;
}

std::span<const char> as_bytes(std::span<const float> values) {
  return {reinterpret_cast<const char*>(values.data()), values.size_bytes()};
}

void append_header(std::vector<char>& out, const RecordHeader& header) {
  const auto put = [&out](const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    out.insert(out.end(), c, c + n);
  };
  put(header.magic.data(), 4);
  put(&header.version, 4);
  put(&header.field0, 4);
  put(&header.field1, 4);
}

RecordHeader parse_header(std::span<const char> bytes, std::string_view magic,
                          const std::filesystem::path& origin) {
  if (bytes.size() < 16) throw DataError("truncated record " + origin.string());
  RecordHeader h;
  std::memcpy(h.magic.data(), bytes.data(), 4);
  std::memcpy(&h.version, bytes.data() + 4, 4);
  std::memcpy(&h.field0, bytes.data() + 8, 4);
  std::memcpy(&h.field1, bytes.data() + 12, 4);
  if (std::string_view(h.magic.data(), 4) != magic) {
    throw DataError("bad magic in " + origin.string() + ", expected " +
                    std::string(magic));
  }
  return h;
}

}  // namespace texgram::io
