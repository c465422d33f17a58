#include "texgram/gram.hpp"

#include <cmath>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"

namespace texgram {

template <typename T>
GramMatrix gram_matrix(const engine::BasicFeatureMap<T>& features) {
  features.validate();
  for (const T v : features.data) {
    if (!std::isfinite(v)) {
      throw NumericalError("non-finite activation in feature map '" + features.layer_name + "'");
    }
  }
  const std::size_t n = features.channels;
  const std::size_t m = features.samples;
  GramMatrix g{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const T* fi = features.data.data() + i * m;
    for (std::size_t j = i; j < n; ++j) {
      const T* fj = features.data.data() + j * m;
      double sum = 0.0;
      for (std::size_t k = 0; k < m; ++k) sum += static_cast<double>(fi[k]) * fj[k];
      g.values[i * n + j] = sum;
      g.values[j * n + i] = sum;
    }
  }
  return g;
}

template GramMatrix gram_matrix(const engine::BasicFeatureMap<float>&);
template GramMatrix gram_matrix(const engine::BasicFeatureMap<double>&);

GramVector gram_vectorize(const GramMatrix& gram) {
  if (gram.values.size() != gram.n * gram.n) throw DataError("malformed Gram matrix");
  GramVector v{gram.n, {}};
  v.values.reserve(gram_vector_length(gram.n));
  for (std::size_t i = 0; i < gram.n; ++i) {
    for (std::size_t j = i; j < gram.n; ++j) v.values.push_back(gram.at(i, j));
  }
  return v;
}

GramMatrix gram_devectorize(const GramVector& vec) {
  if (vec.values.size() != gram_vector_length(vec.n)) throw DataError("malformed Gram vector");
  GramMatrix g{vec.n, std::vector<double>(vec.n * vec.n)};
  std::size_t k = 0;
  for (std::size_t i = 0; i < vec.n; ++i) {
    for (std::size_t j = i; j < vec.n; ++j, ++k) {
      g.values[i * vec.n + j] = vec.values[k];
      g.values[j * vec.n + i] = vec.values[k];
    }
  }
  return g;
}

void write_gram_record(const std::filesystem::path& path, const GramVector& vec) {
  if (vec.values.size() != gram_vector_length(vec.n)) throw DataError("malformed Gram vector");
  std::vector<char> out;
  io::append_header(out, {{'G', 'R', 'A', 'M'}, kGramRecordVersion,
                          static_cast<std::uint32_t>(vec.n), 0});
  const std::vector<float> narrow(vec.values.begin(), vec.values.end());
  const auto body = io::as_bytes(narrow);
  out.insert(out.end(), body.begin(), body.end());
  io::write_file(path, out);
}

GramVector read_gram_record(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  const auto h = io::parse_header(bytes, "GRAM", path);
  if (h.version != kGramRecordVersion) {
    throw DataError("unsupported Gram record version in " + path.string());
  }
  const auto body = std::span<const char>(bytes).subspan(16);
  if (body.size() != 4 * gram_vector_length(h.field0)) {
    throw DataError("Gram record " + path.string() + " has the wrong length");
  }
  const auto floats = io::floats_from_bytes(body);
  return {h.field0, std::vector<double>(floats.begin(), floats.end())};
}

}  // namespace texgram
