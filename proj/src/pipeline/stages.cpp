#include "texgram/pipeline/stages.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <memory>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "texgram/binary_io.hpp"
#include "texgram/clustering.hpp"
#include "texgram/engine/bundle.hpp"
#include "texgram/engine/session.hpp"
#include "texgram/error.hpp"
#include "texgram/gram.hpp"
#include "texgram/hashing.hpp"
#include "texgram/infotheory.hpp"
#include "texgram/parallel.hpp"
#include "texgram/pipeline/brainscore.hpp"
#include "texgram/pipeline/cache.hpp"
#include "texgram/pipeline/dataset.hpp"
#include "texgram/pipeline/figures.hpp"
#include "texgram/pipeline/image.hpp"
#include "texgram/rdm.hpp"
#include "texgram/stats.hpp"
#include "texgram/synthesis/synthesize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace texgram::pipeline {

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 8> kStageNames = {{
    {Stage::kExtract, "extract"},
    {Stage::kGram, "gram"},
    {Stage::kRdm, "rdm"},
    {Stage::kCluster, "cluster"},
    {Stage::kMi, "mi"},
    {Stage::kCorrelate, "correlate"},
    {Stage::kSynthesize, "synthesize"},
    {Stage::kReport, "report"},
}};

std::string bundle_fingerprint(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError("model bundle not found: " + dir.string());
  std::vector<fs::path> files;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Sha256 hash;
  for (const fs::path& f : files) {
    hash.update(f.filename().string()).update("\n").update(sha256_file(f)).update("\n");
  }
  return hash.hex_digest();
}

std::string gram_file(std::size_t layer, std::size_t item) {
  return fmt::format("layer{}/{:06}.gram", layer, item);
}

std::string layer_stem(const std::string& model, std::size_t layer) {
  std::string safe;
  for (char c : model) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return fmt::format("{}_layer{}", safe, layer);
}

void copy_into(const fs::path& from, const fs::path& to, std::vector<fs::path>& outputs) {
  fs::create_directories(to.parent_path());
  fs::copy_file(from, to, fs::copy_options::overwrite_existing);
  outputs.push_back(to);
}

struct ModelContext {
  const ModelEntry* entry = nullptr;
  std::unique_ptr<engine::NetworkGraph> net;
  std::string fingerprint;

  std::size_t layer_count() const { return net->taps().size(); }
};

struct LayerMi {
  std::size_t layer = 0;
  std::string tap;
  double plugin = 0.0;
  double nsb = 0.0;
  double nsb_sd = 0.0;
};

struct ModelMi {
  std::vector<LayerMi> layers;
  std::size_t best_layer = 0;
  double best_value = 0.0;
};

class Runner {
 public:
  explicit Runner(const PipelineConfig& config) : config_(config), cache_(config.cache_dir) {
    config_.validate();
  }

  StageResult run(Stage stage) {
    StageResult result{stage, {}};
    switch (stage) {
      case Stage::kExtract:
        for (auto& m : models()) result.outputs.push_back(extract(m).dir);
        break;
      case Stage::kGram:
        for (auto& m : models()) result.outputs.push_back(gram(m).dir);
        break;
      case Stage::kRdm:
        for (auto& m : models()) {
          for (std::size_t layer : layers(m)) result.outputs.push_back(rdm(m, layer).dir);
        }
        break;
      case Stage::kCluster:
        for (auto& m : models()) {
          for (std::size_t layer : layers(m)) {
            const CacheEntry e = cluster(m, layer);
            const fs::path dest = config_.output_dir / "cluster" / layer_stem(m.entry->name, layer);
            copy_into(e.file("dendrogram.csv"), dest / "dendrogram.csv", result.outputs);
            copy_into(e.file("assignment.csv"), dest / "assignment.csv", result.outputs);
          }
        }
        break;
      case Stage::kMi:
        for (auto& m : models()) {
          const CacheEntry e = mi(m);
          const fs::path dest = config_.output_dir / "mi" / m.entry->name;
          copy_into(e.file("mi_report.csv"), dest / "mi_report.csv", result.outputs);
          copy_into(e.file("mi.json"), dest / "mi.json", result.outputs);
        }
        break;
      case Stage::kCorrelate: {
        const CacheEntry e = correlate();
        copy_into(e.file("correlation.csv"), config_.output_dir / "correlate" / "correlation.csv", result.outputs);
        break;
      }
      case Stage::kSynthesize: {
        const CacheEntry e = synthesize();
        for (const char* name : {"synthesized.png", "loss_trace.csv", "summary.json"}) {
          copy_into(e.file(name), config_.output_dir / "synthesize" / name, result.outputs);
        }
        break;
      }
      case Stage::kReport:
        report(result.outputs);
        break;
    }
    return result;
  }

 private:
  std::vector<ModelContext>& models() {
    if (models_.empty()) {
      for (const ModelEntry& entry : config_.models) {
        ModelContext m;
        m.entry = &entry;
        auto net = engine::load_model_bundle(entry.bundle);
        if (!entry.taps.empty()) net = net.with_taps(entry.taps);
        if (net.taps().empty()) throw DataError("model '" + entry.name + "' has no taps");
        m.net = std::make_unique<engine::NetworkGraph>(std::move(net));
        m.fingerprint = bundle_fingerprint(entry.bundle);
        models_.push_back(std::move(m));
      }
    }
    return models_;
  }

  ModelContext& model_named(const std::string& name) {
    for (auto& m : models()) {
      if (m.entry->name == name) return m;
    }
    throw ConfigError("model '" + name + "' is not configured");
  }

  std::vector<std::size_t> layers(const ModelContext& m) const {
    if (config_.layer) {
      if (*config_.layer > m.layer_count()) {
        throw ConfigError(fmt::format("layer {} requested but model '{}' has {} taps", *config_.layer,
                                      m.entry->name, m.layer_count()));
      }
      return {*config_.layer};
    }
    std::vector<std::size_t> all(m.layer_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i + 1;
    return all;
  }

  const DatasetIndex& dataset() {
    if (!dataset_) {
      dataset_ = ingest_dataset(config_.dataset_root);
      dataset_hash_ = dataset_->fingerprint();
      spdlog::info("dataset: {} images in {} classes", dataset_->items.size(), dataset_->class_names.size());
    }
    return *dataset_;
  }

  std::size_t cluster_count() {
    const std::size_t k = config_.k.value_or(dataset().class_names.size());
    if (k > dataset().items.size()) {
      throw ConfigError(fmt::format("k = {} exceeds the {} images", k, dataset().items.size()));
    }
    return k;
  }

  CacheEntry extract(ModelContext& m) {
    const DatasetIndex& data = dataset();
    const json desc = {{"model", m.entry->name},
                       {"bundle", m.fingerprint},
                       {"taps", m.net->taps()},
                       {"dataset", dataset_hash_}};
    return cache_.get_or_produce("extract", desc.dump(), [&](const fs::path& dir) {
      json items = json::array();
      for (const DatasetItem& item : data.items) {
        items.push_back({{"item_id", item.item_id},
                         {"path", fs::relative(item.path, data.root).generic_string()},
                         {"class_id", item.class_id}});
      }
      io::write_text(dir / "index.json", json{{"class_names", data.class_names},
                                              {"class_counts", data.class_counts},
                                              {"items", items}}
                                             .dump(2) + "\n");
      json taps = json::array();
      const auto& tap_nodes = m.net->tap_indices();
      for (std::size_t t = 0; t < tap_nodes.size(); ++t) {
        const Shape& shape = m.net->output_shape(tap_nodes[t]);
        taps.push_back({{"layer_index", t + 1},
                        {"name", m.net->taps()[t]},
                        {"channels", shape[0]},
                        {"samples", shape[1] * shape[2]},
                        {"gram_length", gram_vector_length(shape[0])}});
      }
      io::write_text(dir / "taps.json", json{{"model", m.entry->name}, {"taps", taps}}.dump(2) + "\n");
    });
  }

  CacheEntry gram(ModelContext& m) {
    const CacheEntry upstream = extract(m);
    const json desc = {{"extract", upstream.content_hash}};
    return cache_.get_or_produce("gram", desc.dump(), [&](const fs::path& dir) {
      const DatasetIndex& data = dataset();
      const engine::NetworkGraph& net = *m.net;
      parallel_for(
          data.items.size(),
          [&](std::size_t i) {
            const Tensor image = preprocess_image(data.items[i].path, net.input_spec());
            const auto maps = engine::forward_with_taps(net, image);
            for (std::size_t t = 0; t < maps.size(); ++t) {
              write_gram_record(dir / gram_file(t + 1, i), gram_vectorize(gram_matrix(maps[t])));
            }
          },
          config_.workers);
    });
  }

  CacheEntry rdm(ModelContext& m, std::size_t layer) {
    const CacheEntry upstream = gram(m);
    const json desc = {{"gram", upstream.content_hash},
                       {"layer", layer},
                       {"distance", to_string(config_.distance)},
                       {"standardize", config_.standardize}};
    return cache_.get_or_produce("rdm", desc.dump(), [&](const fs::path& dir) {
      const DatasetIndex& data = dataset();
      std::vector<GramVector> vectors(data.items.size());
      for (std::size_t i = 0; i < vectors.size(); ++i) {
        vectors[i] = read_gram_record(upstream.file(gram_file(layer, i)));
      }
      const Rdm result =
          compute_rdm(vectors, data.item_ids(), {config_.distance, config_.standardize, config_.workers});
      save_rdm(dir / "rdm.bin", result, {m.net->taps()[layer - 1], m.entry->name, config_.distance});
    });
  }

  CacheEntry cluster(ModelContext& m, std::size_t layer) {
    const CacheEntry upstream = rdm(m, layer);
    const std::size_t k = cluster_count();
    const json desc = {{"rdm", upstream.content_hash}, {"k", k}};
    return cache_.get_or_produce("cluster", desc.dump(), [&](const fs::path& dir) {
      const Rdm distances = load_rdm(upstream.file("rdm.bin"));
      const Dendrogram tree = ward_linkage(distances);
      const ClusterAssignment assignment = cut_tree(tree, k);
      io::write_text(dir / "dendrogram.csv", dendrogram_csv(tree));
      io::write_text(dir / "assignment.csv", assignment_csv(assignment, distances.item_ids));
      io::write_text(dir / "labels.json", json{{"k", k}, {"labels", assignment.labels}}.dump() + "\n");
    });
  }

  CacheEntry mi(ModelContext& m) {
    json upstream = json::array();
    std::vector<CacheEntry> entries;
    for (std::size_t layer : layers(m)) {
      entries.push_back(cluster(m, layer));
      upstream.push_back({{"layer", layer}, {"cluster", entries.back().content_hash}});
    }
    const json desc = {{"model", m.entry->name},
                       {"clusters", upstream},
                       {"method", to_string(config_.mi_method)}};
    return cache_.get_or_produce("mi", desc.dump(), [&](const fs::path& dir) {
      const DatasetIndex& data = dataset();
      const std::vector<int> classes = data.labels();
      const auto selected = layers(m);
      std::vector<MiReportRow> rows;
      json layer_json = json::array();
      std::optional<std::size_t> best;
      double best_value = 0.0, best_sd = 0.0;
      for (std::size_t i = 0; i < selected.size(); ++i) {
        const json labels_doc = json::parse(io::read_text(entries[i].file("labels.json")));
        const auto clusters = labels_doc.at("labels").get<std::vector<int>>();
        const std::size_t k = labels_doc.at("k").get<std::size_t>();
        const ContingencyTable table = contingency_table(classes, clusters, data.class_names.size(), k);
        const EntropyEstimate plugin = mutual_information(table, EntropyMethod::kPlugin);
        const EntropyEstimate nsb = mutual_information(table, EntropyMethod::kNsb);
        const int layer_index = static_cast<int>(selected[i]);
        rows.push_back({m.entry->name, layer_index, EntropyMethod::kPlugin, plugin.value, std::nullopt});
        rows.push_back({m.entry->name, layer_index, EntropyMethod::kNsb, nsb.value, nsb.posterior_sd});
        layer_json.push_back({{"layer_index", layer_index},
                              {"tap", m.net->taps()[selected[i] - 1]},
                              {"plugin_bits", plugin.value},
                              {"nsb_bits", nsb.value},
                              {"nsb_posterior_sd", nsb.posterior_sd.value_or(0.0)}});
        const EntropyEstimate& chosen = config_.mi_method == EntropyMethod::kNsb ? nsb : plugin;
        if (!best || chosen.value > best_value) {
          best = selected[i];
          best_value = chosen.value;
          best_sd = chosen.posterior_sd.value_or(0.0);
        }
      }
      io::write_text(dir / "mi_report.csv", mi_report_csv(rows));
      const json doc = {{"model", m.entry->name},
                        {"method", to_string(config_.mi_method)},
                        {"layers", layer_json},
                        {"best", {{"layer_index", *best}, {"mi_bits", best_value}, {"posterior_sd", best_sd}}}};
      io::write_text(dir / "mi.json", doc.dump(2) + "\n");
    });
  }

  static ModelMi read_mi(const CacheEntry& entry) {
    const json doc = json::parse(io::read_text(entry.file("mi.json")));
    ModelMi out;
    for (const json& l : doc.at("layers")) {
      out.layers.push_back({l.at("layer_index").get<std::size_t>(), l.at("tap").get<std::string>(),
                            l.at("plugin_bits").get<double>(), l.at("nsb_bits").get<double>(),
                            l.at("nsb_posterior_sd").get<double>()});
    }
    out.best_layer = doc.at("best").at("layer_index").get<std::size_t>();
    out.best_value = doc.at("best").at("mi_bits").get<double>();
    return out;
  }

  CacheEntry correlate() {
    if (config_.brainscore_csv.empty()) throw ConfigError("correlate needs 'brainscore_csv' in the config");
    if (models().size() < 3) throw ConfigError("correlate needs at least 3 models");
    std::error_code ec;
    if (!fs::is_regular_file(config_.brainscore_csv, ec)) {
      throw DataError("Brain-Score CSV not found: " + config_.brainscore_csv.string());
    }
    json upstream = json::array();
    std::vector<CacheEntry> entries;
    for (auto& m : models()) {
      entries.push_back(mi(m));
      upstream.push_back({{"model", m.entry->name}, {"mi", entries.back().content_hash}});
    }
    const json desc = {{"mi", upstream}, {"brainscore", sha256_file(config_.brainscore_csv)}};
    return cache_.get_or_produce("correlate", desc.dump(), [&](const fs::path& dir) {
      const auto records = ingest_brainscore_csv(config_.brainscore_csv);
      std::map<std::string, double> best;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        best[models()[i].entry->name] = read_mi(entries[i]).best_value;
      }
      const auto results = correlate_mi_brainscore(best, records);
      io::write_text(dir / "correlation.csv", correlation_csv(results));
      std::string scatter = "metric,model,best_mi_bits,score\n";
      for (std::string_view metric : kBrainScoreMetrics) {
        for (const BrainScoreRecord& r : records) {
          if (const auto it = best.find(r.model); it != best.end()) {
            scatter += fmt::format("{},{},{},{}\n", metric, r.model, it->second, r.score(metric));
          }
        }
      }
      io::write_text(dir / "correlation_scatter.csv", scatter);
    });
  }

  CacheEntry synthesize() {
    const SynthesisSettings& s = config_.synthesis;
    if (s.exemplar.empty()) throw ConfigError("synthesize needs 'synthesis.exemplar' in the config");
    ModelContext& m = s.model.empty() ? models().front() : model_named(s.model);
    std::error_code ec;
    if (!fs::is_regular_file(s.exemplar, ec)) throw DataError("exemplar not found: " + s.exemplar.string());
    const json desc = {{"model", m.entry->name},
                       {"bundle", m.fingerprint},
                       {"taps", m.net->taps()},
                       {"exemplar", sha256_file(s.exemplar)},
                       {"seed", s.config.seed},
                       {"max_iterations", s.config.max_iterations},
                       {"history_size", s.config.history_size},
                       {"wolfe_c1", s.config.wolfe_c1},
                       {"wolfe_c2", s.config.wolfe_c2},
                       {"grad_tolerance", s.config.grad_tolerance},
                       {"layer_weights", s.config.layer_weights}};
    return cache_.get_or_produce("synthesize", desc.dump(), [&](const fs::path& dir) {
      const Tensor exemplar = preprocess_image(s.exemplar, m.net->input_spec());
      const auto result = synthesis::synthesize_texture(*m.net, exemplar, s.config);
      write_png(dir / "synthesized.png", to_rgb_image(result.image, m.net->input_spec()));
      io::write_text(dir / "loss_trace.csv", synthesis::loss_trace_csv(result, m.net->taps()));
      const json summary = {{"model", m.entry->name},
                            {"status", std::string(synthesis::to_string(result.status))},
                            {"iterations", result.iterations},
                            {"initial_loss", result.report.trace.front()},
                            {"final_loss", result.report.total}};
      io::write_text(dir / "summary.json", summary.dump(2) + "\n");
    });
  }

  void report(std::vector<fs::path>& outputs) {
    const fs::path out = config_.output_dir / "report";
    std::error_code ec;
    fs::remove_all(out, ec);
    fs::create_directories(out / "heatmaps");
    const auto emit = [&](const std::string& name, const std::string& text) {
      io::write_text(out / name, text);
      outputs.push_back(out / name);
    };

    const std::vector<int> labels = dataset().labels();
    std::vector<MiReportRow> report_rows;
    std::vector<LineSeries> series;
    std::string per_layer = "model,layer_index,tap,plugin_mi_bits,nsb_mi_bits,nsb_posterior_sd\n";
    std::string best_csv = "model,method,layer_index,mi_bits\n";
    for (auto& m : models()) {
      for (std::size_t layer : layers(m)) {
        const Rdm sorted = sort_by_class(load_rdm(rdm(m, layer).file("rdm.bin")), labels);
        const HeatmapData plotted = block_average(sorted, config_.figures.heatmap_max_size);
        const std::string stem = "heatmaps/" + layer_stem(m.entry->name, layer);
        write_png(out / (stem + ".png"), render_heatmap(plotted));
        outputs.push_back(out / (stem + ".png"));
        emit(stem + ".csv", heatmap_csv(plotted));
      }

      const ModelMi result = read_mi(mi(m));
      LineSeries line{m.entry->name, {}, {}};
      for (const LayerMi& l : result.layers) {
        per_layer += fmt::format("{},{},{},{},{},{}\n", m.entry->name, l.layer, l.tap, l.plugin, l.nsb, l.nsb_sd);
        report_rows.push_back({m.entry->name, static_cast<int>(l.layer), EntropyMethod::kPlugin, l.plugin, std::nullopt});
        report_rows.push_back({m.entry->name, static_cast<int>(l.layer), EntropyMethod::kNsb, l.nsb, l.nsb_sd});
        line.x.push_back(static_cast<double>(l.layer));
        line.y.push_back(config_.mi_method == EntropyMethod::kNsb ? l.nsb : l.plugin);
      }
      best_csv += fmt::format("{},{},{},{}\n", m.entry->name, to_string(config_.mi_method), result.best_layer,
                              result.best_value);
      series.push_back(std::move(line));
    }
    emit("mi_per_layer.csv", per_layer);
    emit("mi_report.csv", mi_report_csv(report_rows));
    emit("best_mi.csv", best_csv);
    emit("mi_per_layer.svg",
         line_plot_svg(fmt::format("MI between classes and clusters ({})", to_string(config_.mi_method)), "layer",
                       "MI (bits)", series));

    if (config_.brainscore_csv.empty()) {
      spdlog::warn("report: no brainscore_csv configured, skipping the correlation figure");
      return;
    }
    const CacheEntry corr = correlate();
    emit("correlation.csv", io::read_text(corr.file("correlation.csv")));
    emit("correlation_scatter.csv", io::read_text(corr.file("correlation_scatter.csv")));

    const auto records = ingest_brainscore_csv(config_.brainscore_csv);
    std::map<std::string, double> best;
    for (auto& m : models()) best[m.entry->name] = read_mi(mi(m)).best_value;
    const auto correlations = correlate_mi_brainscore(best, records);
    std::vector<ScatterPanel> panels;
    for (std::size_t i = 0; i < kBrainScoreMetrics.size(); ++i) {
      ScatterPanel panel;
      panel.title = std::string(kBrainScoreMetrics[i]);
      const CorrelationResult& c = correlations[i];
      panel.subtitle = c.defined ? fmt::format("r = {:.3f}, p = {:.3f}{}", c.r, c.p, c.significant ? " *" : "")
                                 : std::string("r undefined (zero variance)");
      for (const BrainScoreRecord& r : records) {
        if (const auto it = best.find(r.model); it != best.end()) {
          panel.x.push_back(it->second);
          panel.y.push_back(r.scores[i]);
          panel.labels.push_back(r.model);
        }
      }
      panels.push_back(std::move(panel));
    }
    emit("correlation_scatter.svg", scatter_grid_svg(panels, 4, "best MI (bits)", "Brain-Score"));
  }

  PipelineConfig config_;
  StageCache cache_;
  std::vector<ModelContext> models_;
  std::optional<DatasetIndex> dataset_;
  std::string dataset_hash_;
};

}  // namespace

std::string_view to_string(Stage stage) {
  for (const auto& [s, name] : kStageNames) {
    if (s == stage) return name;
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (const auto& [s, n] : kStageNames) {
    if (n == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

StageResult run_stage(const PipelineConfig& config, Stage stage) {
  return Runner(config).run(stage);
}

}  // namespace texgram::pipeline
