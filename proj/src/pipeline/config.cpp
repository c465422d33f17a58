#include "texgram/pipeline/config.hpp"

#include <set>

#include <json.hpp>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace texgram::pipeline {

namespace {

void reject_unknown(const json& object, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

template <typename T>
T get(const json& object, const std::string& key, const std::string& where) {
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("'" + key + "' in " + where + " has the wrong type");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (models.empty()) throw ConfigError("config lists no models");
  std::set<std::string> names;
  for (const ModelEntry& m : models) {
    if (m.name.empty()) throw ConfigError("model entry without a name");
    if (m.bundle.empty()) throw ConfigError("model '" + m.name + "' has no bundle path");
    if (!names.insert(m.name).second) throw ConfigError("duplicate model name '" + m.name + "'");
  }
  if (dataset_root.empty()) throw ConfigError("config has no dataset root");
  if (cache_dir.empty()) throw ConfigError("config has no cache directory");
  if (output_dir.empty()) throw ConfigError("config has no output directory");
  if (k && *k < 1) throw ConfigError("k must be >= 1");
  if (layer && (*layer < 1 || *layer > 5)) throw ConfigError("layer must be in 1..5");
  if (figures.heatmap_max_size < 1) throw ConfigError("heatmap_max_size must be >= 1");
  if (!synthesis.model.empty() && !names.count(synthesis.model)) {
    throw ConfigError("synthesis model '" + synthesis.model + "' is not configured");
  }
  synthesis.config.validate();
}

PipelineConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"dataset", "cache", "output", "brainscore_csv", "models", "distance",
                  "standardize", "mi_method", "k", "layer", "seed", "workers", "synthesis",
                  "figures"},
                 "config");

  PipelineConfig config;
  const std::string where = "config";
  if (doc.contains("dataset")) config.dataset_root = resolve(base_dir, get<std::string>(doc, "dataset", where));
  config.cache_dir = resolve(base_dir, doc.contains("cache") ? get<std::string>(doc, "cache", where) : "texgram-cache");
  config.output_dir = resolve(base_dir, doc.contains("output") ? get<std::string>(doc, "output", where) : "texgram-out");
  if (doc.contains("brainscore_csv")) {
    config.brainscore_csv = resolve(base_dir, get<std::string>(doc, "brainscore_csv", where));
  }

  if (!doc.contains("models") || !doc["models"].is_array()) {
    throw ConfigError("config needs a 'models' array");
  }
  for (const json& entry : doc["models"]) {
    if (!entry.is_object()) throw ConfigError("model entries must be objects");
    reject_unknown(entry, {"name", "bundle", "taps"}, "model entry");
    ModelEntry model;
    model.name = entry.contains("name") ? get<std::string>(entry, "name", "model entry") : "";
    if (!entry.contains("bundle")) throw ConfigError("model '" + model.name + "' has no bundle path");
    model.bundle = resolve(base_dir, get<std::string>(entry, "bundle", "model entry"));
    if (entry.contains("taps")) model.taps = get<std::vector<std::string>>(entry, "taps", "model entry");
    config.models.push_back(std::move(model));
  }

  if (doc.contains("distance")) config.distance = parse_distance_variant(get<std::string>(doc, "distance", where));
  if (doc.contains("standardize")) config.standardize = get<bool>(doc, "standardize", where);
  if (doc.contains("mi_method")) config.mi_method = parse_entropy_method(get<std::string>(doc, "mi_method", where));
  if (doc.contains("k") && !doc["k"].is_null()) config.k = get<std::size_t>(doc, "k", where);
  if (doc.contains("layer") && !doc["layer"].is_null()) config.layer = get<std::size_t>(doc, "layer", where);
  if (doc.contains("seed")) config.seed = get<std::uint64_t>(doc, "seed", where);
  if (doc.contains("workers")) config.workers = get<std::size_t>(doc, "workers", where);

  if (doc.contains("synthesis")) {
    const json& s = doc["synthesis"];
    const std::string sw = "synthesis";
    if (!s.is_object()) throw ConfigError("'synthesis' must be an object");
    reject_unknown(s,
                   {"model", "exemplar", "max_iterations", "history_size", "wolfe_c1", "wolfe_c2",
                    "grad_tolerance", "layer_weights"},
                   sw);
    SynthesisSettings& out = config.synthesis;
    if (s.contains("model")) out.model = get<std::string>(s, "model", sw);
    if (s.contains("exemplar")) out.exemplar = resolve(base_dir, get<std::string>(s, "exemplar", sw));
    if (s.contains("max_iterations")) out.config.max_iterations = get<std::size_t>(s, "max_iterations", sw);
    if (s.contains("history_size")) out.config.history_size = get<std::size_t>(s, "history_size", sw);
    if (s.contains("wolfe_c1")) out.config.wolfe_c1 = get<double>(s, "wolfe_c1", sw);
    if (s.contains("wolfe_c2")) out.config.wolfe_c2 = get<double>(s, "wolfe_c2", sw);
    if (s.contains("grad_tolerance")) out.config.grad_tolerance = get<double>(s, "grad_tolerance", sw);
    if (s.contains("layer_weights")) out.config.layer_weights = get<std::vector<double>>(s, "layer_weights", sw);
  }
  if (doc.contains("figures")) {
    const json& f = doc["figures"];
    if (!f.is_object()) throw ConfigError("'figures' must be an object");
    reject_unknown(f, {"heatmap_max_size"}, "figures");
    if (f.contains("heatmap_max_size")) {
      config.figures.heatmap_max_size = get<std::size_t>(f, "heatmap_max_size", "figures");
    }
  }
  config.synthesis.config.seed = config.seed;
  config.validate();
  return config;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_config(text, fs::absolute(path).parent_path());
}

void apply_overrides(PipelineConfig& config, const ConfigOverrides& overrides) {
  if (overrides.model) {
    std::vector<ModelEntry> kept;
    for (const ModelEntry& m : config.models) {
      if (m.name == *overrides.model) kept.push_back(m);
    }
    if (kept.empty()) throw ConfigError("model '" + *overrides.model + "' is not configured");
    config.models = std::move(kept);
    config.synthesis.model = *overrides.model;
  }
  if (overrides.layer) config.layer = overrides.layer;
  if (overrides.k) config.k = overrides.k;
  if (overrides.mi_method) config.mi_method = parse_entropy_method(*overrides.mi_method);
  if (overrides.distance) config.distance = parse_distance_variant(*overrides.distance);
  if (overrides.seed) {
    config.seed = *overrides.seed;
    config.synthesis.config.seed = *overrides.seed;
  }
  if (overrides.output_dir) config.output_dir = fs::absolute(*overrides.output_dir).lexically_normal();
  config.validate();
}

}  // namespace texgram::pipeline
