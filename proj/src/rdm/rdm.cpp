#include "texgram/rdm.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"
#include "texgram/parallel.hpp"

namespace texgram {

std::string to_string(DistanceVariant variant) {
  return variant == DistanceVariant::kUpperTriangle ? "upper-tri" : "full-frobenius";
}

DistanceVariant parse_distance_variant(const std::string& name) {
  if (name == "upper-tri") return DistanceVariant::kUpperTriangle;
  if (name == "full-frobenius") return DistanceVariant::kFullFrobenius;
  throw ConfigError("unknown distance variant '" + name + "' (upper-tri|full-frobenius)");
}

namespace {

std::vector<double> coordinate_weights(std::size_t n, DistanceVariant variant) {
  std::vector<double> w;
  w.reserve(gram_vector_length(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      w.push_back(variant == DistanceVariant::kFullFrobenius && i != j ? 2.0 : 1.0);
    }
  }
  return w;
}

std::vector<double> standardized(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sd > 0 ? (v[i] - mean) / sd : 0.0;
  return out;
}

}  // namespace

Rdm compute_rdm(std::span<const GramVector> vectors, std::vector<std::string> item_ids,
                const RdmOptions& options) {
  const std::size_t s = vectors.size();
  if (s < 2) throw DataError("an RDM needs at least two items");
  if (item_ids.size() != s) throw DataError("item id count does not match vector count");
  const std::size_t len = vectors[0].values.size();
  for (const auto& v : vectors) {
    if (v.values.size() != len || v.n != vectors[0].n) {
      throw DataError("Gram vectors differ in length");
    }
    for (double x : v.values) {
      if (!std::isfinite(x)) throw NumericalError("non-finite Gram vector entry");
    }
  }

  std::vector<std::vector<double>> prepared;
  if (options.standardize) {
    for (const auto& v : vectors) prepared.push_back(standardized(v.values));
  }
  const auto data = [&](std::size_t a) -> const double* {
    return options.standardize ? prepared[a].data() : vectors[a].values.data();
  };
  const bool weighted = options.variant == DistanceVariant::kFullFrobenius;
  const std::vector<double> weights =
      weighted ? coordinate_weights(vectors[0].n, options.variant) : std::vector<double>{};

  Rdm rdm{s, std::vector<float>(s * s, 0.0f), std::move(item_ids)};
  parallel_for(
      s,
      [&](std::size_t a) {
        const double* va = data(a);
        for (std::size_t b = a + 1; b < s; ++b) {
          const double* vb = data(b);
          double sum = 0.0;
          if (weighted) {
            for (std::size_t k = 0; k < len; ++k) {
              const double d = va[k] - vb[k];
              sum += weights[k] * d * d;
            }
          } else {
            for (std::size_t k = 0; k < len; ++k) {
              const double d = va[k] - vb[k];
              sum += d * d;
            }
          }
          const float dist = static_cast<float>(std::sqrt(sum));
          rdm.values[a * s + b] = dist;
          rdm.values[b * s + a] = dist;
        }
      },
      options.workers);
  return rdm;
}

Rdm sort_by_class(const Rdm& rdm, std::span<const int> labels,
                  std::vector<std::size_t>* permutation) {
  if (labels.size() != rdm.size || rdm.item_ids.size() != rdm.size) {
    throw DataError("label count does not match RDM size");
  }
  std::vector<std::size_t> order(rdm.size);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  Rdm out{rdm.size, std::vector<float>(rdm.values.size()), {}};
  for (std::size_t i = 0; i < rdm.size; ++i) {
    out.item_ids.push_back(rdm.item_ids[order[i]]);
    for (std::size_t j = 0; j < rdm.size; ++j) {
      out.values[i * rdm.size + j] = rdm.at(order[i], order[j]);
    }
  }
  if (permutation) *permutation = std::move(order);
  return out;
}

void save_rdm(const std::filesystem::path& bin_path, const Rdm& rdm, const RdmSidecar& sidecar) {
  io::write_file(bin_path, io::as_bytes(std::span<const float>(rdm.values)));
  const nlohmann::json meta{{"size", rdm.size},
                            {"layer", sidecar.layer},
                            {"model", sidecar.model},
                            {"item_ids", rdm.item_ids},
                            {"distance_variant", to_string(sidecar.variant)}};
  auto json_path = bin_path;
  json_path.replace_extension(".json");
  io::write_text(json_path, meta.dump(2) + "\n");
}

Rdm load_rdm(const std::filesystem::path& bin_path, RdmSidecar* sidecar) {
  auto json_path = bin_path;
  json_path.replace_extension(".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_text(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt RDM sidecar " + json_path.string() + ": " + e.what());
  }
  Rdm rdm;
  rdm.size = meta.at("size").get<std::size_t>();
  rdm.item_ids = meta.at("item_ids").get<std::vector<std::string>>();
  const auto bytes = io::read_file(bin_path);
  if (bytes.size() != 4 * rdm.size * rdm.size || rdm.item_ids.size() != rdm.size) {
    throw DataError("RDM file " + bin_path.string() + " does not match its sidecar");
  }
  rdm.values = io::floats_from_bytes(bytes);
  if (sidecar) {
    sidecar->layer = meta.at("layer").get<std::string>();
    sidecar->model = meta.at("model").get<std::string>();
    sidecar->variant = parse_distance_variant(meta.at("distance_variant").get<std::string>());
  }
  return rdm;
}

}  // namespace texgram
