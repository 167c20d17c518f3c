#include "narrative/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "narrative/ca_io.hpp"
#include "narrative/chrono_cluster.hpp"
#include "narrative/csv.hpp"
#include "narrative/error.hpp"

namespace narrative {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kUnits = "units.jsonl";
constexpr const char* kSourceUnits = "source_units.jsonl";
constexpr const char* kTable = "table.csv";
constexpr const char* kTriplets = "table_triplets.csv";
constexpr const char* kTableSummary = "table_summary.json";
constexpr const char* kModel = "model.json";
constexpr const char* kSegmentation = "segmentation.csv";
constexpr const char* kKeptSegments = "segments_kept.csv";
constexpr const char* kKeptTable = "table_kept.csv";
constexpr const char* kSegmentTable = "segment_table.csv";
constexpr const char* kManifest = "manifest.json";

class Artifacts {
 public:
  Artifacts(const fs::path& dir, const Logger& log) : dir_(dir), log_(log) {}

  std::string path(const std::string& name) {
    written_.push_back(name);
    if (log_) log_("  writing " + name);
    return (dir_ / name).string();
  }

  std::string input(const std::string& name, Stage needed_by) const {
    const fs::path p = dir_ / name;
    if (!fs::exists(p)) {
      throw StageError(needed_by, "missing upstream artifact '" + p.string() + "'");
    }
    return p.string();
  }

  bool has(const std::string& name) const { return fs::exists(dir_ / name); }

  void write_json(const std::string& name, const json& doc) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw Error("cannot write '" + (dir_ / name).string() + "'");
    out << doc.dump(1) << '\n';
  }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw Error("cannot write '" + (dir_ / name).string() + "'");
    out << text;
  }

  std::vector<std::string> written() const { return written_; }

 private:
  fs::path dir_;
  Logger log_;
  std::vector<std::string> written_;
};

json summary_json(const TableSummary& s) {
  return {{"rows", s.rows},           {"cols", s.cols},           {"nonzeros", s.nonzeros},
          {"density", s.density},     {"grand_total", s.grand_total}, {"max_count", s.max_count},
          {"max_row", s.max_row},     {"max_col", s.max_col}};
}

std::string plane_tag(const std::array<Eigen::Index, 2>& plane) {
  return std::to_string(plane[0] + 1) + "_" + std::to_string(plane[1] + 1);
}

Eigen::MatrixXd cluster_features(const PipelineConfig& cfg, const CAModel& model) {
  if (model.axes() < 1) throw Error("model has no axes to cluster on");
  if (cfg.feature == ClusterFeature::Cos2) return diagnostics(model).row_cos2;
  return model.row_principal;
}

void ingest_stage(const PipelineConfig& cfg, Artifacts& out) {
  std::vector<TextUnit> units;
  switch (cfg.format) {
    case SourceFormat::DialogueCsv:
      units = load_dialogue_csv(cfg.source_path.string(), cfg.rules);
      break;
    case SourceFormat::PlainText:
      units = split_lines(cfg.source_path.string(), *cfg.block_size, cfg.rules);
      break;
    case SourceFormat::TweetStream:
      units = load_tweet_stream(cfg.source_path.string(), cfg.rules);
      break;
  }
  if (cfg.aggregation_map) {
    if (cfg.filter_source_units) write_units_jsonl(units, out.path(kSourceUnits));
    units = aggregate(units, UnitAggregationMap::from_csv(cfg.aggregation_map->string(), units));
  }
  write_units_jsonl(units, out.path(kUnits));
}

void table_stage(const PipelineConfig& cfg, Artifacts& out) {
  auto units = read_units_jsonl(out.input(kUnits, Stage::Table));
  const auto raw = build_table(units);
  FilterResult filtered;
  json source_summary;
  if (!cfg.filter_source_units) {
    filtered = filter_vocabulary(raw, cfg.filter);
  } else {
    const auto source = build_table(read_units_jsonl(out.input(kSourceUnits, Stage::Table)));
    const auto kept = filter_vocabulary(source, cfg.filter);
    source_summary = {{"raw", summary_json(describe(source))}, {"filtered", summary_json(describe(kept.table))}};
    const std::set<std::string> words(kept.table.col_ids().begin(), kept.table.col_ids().end());
    for (auto& u : units) {
      std::erase_if(u.tokens, [&](const std::string& t) { return !words.count(t); });
    }
    filtered = filter_vocabulary(build_table(units), FilterSpec{});
    const std::set<std::string> retained(filtered.table.col_ids().begin(), filtered.table.col_ids().end());
    filtered.removed_words.clear();
    for (const auto& w : raw.col_ids())
      if (!retained.count(w)) filtered.removed_words.push_back(w);
  }
  write_dense_csv(filtered.table, out.path(kTable));
  write_triplets_csv(filtered.table, out.path(kTriplets));
  json doc;
  doc["raw"] = summary_json(describe(raw));
  doc["filtered"] = summary_json(describe(filtered.table));
  doc["filter"] = {{"min_units_per_word", cfg.filter.min_units_per_word},
                   {"min_total_per_word", cfg.filter.min_total_per_word}};
  doc["removed_word_count"] = filtered.removed_words.size();
  doc["removed_rows"] = filtered.removed_rows;
  doc["total_inertia"] = total_inertia(filtered.table);
  if (!source_summary.is_null()) doc["source"] = source_summary;
  out.write_json(kTableSummary, doc);
}

void ca_stage(const PipelineConfig& cfg, Artifacts& out) {
  const auto table = read_dense_csv(out.input(kTable, Stage::Ca));
  const CAModel model = fit(table);
  write_model_json(model, out.path(kModel));
  if (model.axes() < 1) return;

  const auto diag = diagnostics(model);
  write_matrix_csv(out.path("row_principal.csv"), model.row_labels, model.row_principal, "F");
  write_matrix_csv(out.path("col_principal.csv"), model.col_labels, model.col_principal, "F");
  write_matrix_csv(out.path("row_ctr.csv"), model.row_labels, diag.row_ctr, "CTR");
  write_matrix_csv(out.path("col_ctr.csv"), model.col_labels, diag.col_ctr, "CTR");
  write_matrix_csv(out.path("row_cos2.csv"), model.row_labels, diag.row_cos2, "COS2_");
  write_matrix_csv(out.path("col_cos2.csv"), model.col_labels, diag.col_cos2, "COS2_");
  for (const auto& plane : cfg.planes) {
    if (plane[0] >= model.axes() || plane[1] >= model.axes()) continue;
    const auto tag = plane_tag(plane);
    write_plane_csv(out.path("plane_" + tag + "_rows.csv"), model, diag, Side::Rows, plane);
    write_plane_csv(out.path("plane_" + tag + "_cols.csv"), model, diag, Side::Columns, plane);
    write_plane_svg(out.path("plane_" + tag + ".svg"), model, diag, plane, cfg.plot_multiplier);
  }

  // Speakers enter as supplementary columns: a 0/1 indicator over the rows.
  const auto units = read_units_jsonl(out.input(kUnits, Stage::Ca));
  const auto names = speaker_names(units);
  std::vector<std::string> projected;
  Eigen::MatrixXd coords(0, model.axes());
  for (const auto& name : names) {
    Eigen::VectorXd indicator = Eigen::VectorXd::Zero(model.rows());
    for (const auto& u : units) {
      if (u.speaker != name) continue;
      if (auto i = table.row_index(u.id)) indicator(*i) = 1.0;
    }
    if (indicator.sum() <= 0) continue;
    coords.conservativeResize(coords.rows() + 1, Eigen::NoChange);
    coords.row(coords.rows() - 1) = project_supplementary(model, indicator, Side::Columns).transpose();
    projected.push_back(name);
  }
  if (!projected.empty()) write_matrix_csv(out.path("supplementary_speakers.csv"), projected, coords, "F");
}

void cluster_stage(const PipelineConfig& cfg, Artifacts& out) {
  const auto model = read_model_json(out.input(kModel, Stage::Cluster));
  const auto tree = constrained_cluster(cluster_features(cfg, model));
  out.write_json("dendrogram.json", dendrogram_to_json(tree, model.row_labels));
  out.write_text("dendrogram.txt", dendrogram_outline(tree, model.row_labels));
  if (!cfg.cut_count && !cfg.cut_height) return;
  const auto labels = cfg.cut_count ? cut_count(tree, *cfg.cut_count) : cut_height(tree, *cfg.cut_height);
  std::ofstream partition(out.path("partition.csv"), std::ios::binary);
  csv::write_row(partition, {"id", "cluster"});
  for (std::size_t i = 0; i < labels.size(); ++i) csv::write_row(partition, {model.row_labels[i], std::to_string(labels[i])});
}

void segment_stage(const PipelineConfig& cfg, Artifacts& out) {
  const auto model = read_model_json(out.input(kModel, Stage::Segment));
  const auto table = read_dense_csv(out.input(kTable, Stage::Segment));
  const auto seg = segment(cluster_features(cfg, model), cfg.alpha, cfg.n_perm, *cfg.seed);
  write_segmentation_csv(seg, model.row_labels, out.path(kSegmentation));
  json summary;
  summary["alpha"] = cfg.alpha;
  summary["n_permutations"] = cfg.n_perm;
  summary["seed"] = *cfg.seed;
  summary["segments"] = seg.segments.size();
  summary["rows"] = table.rows();
  summary["words"] = table.cols();
  if (cfg.drop_singletons) {
    const auto kept = drop_singleton_segments(seg, table);
    write_segmentation_csv(kept.segmentation, kept.unit_table.row_ids(), out.path(kKeptSegments));
    write_dense_csv(kept.unit_table, out.path(kKeptTable));
    write_dense_csv(kept.segment_table, out.path(kSegmentTable));
    summary["non_singleton_segments"] = kept.segmentation.segments.size();
    summary["non_singleton_rows"] = kept.unit_table.rows();
    summary["non_singleton_words"] = kept.unit_table.cols();
  }
  out.write_json("segment_summary.json", summary);
}

void track_stage(const PipelineConfig& cfg, Artifacts& out) {
  if (cfg.terms.empty() && cfg.dyads.empty()) return;
  if (cfg.mode == ClusterMode::Dendrogram) {
    const auto model = read_model_json(out.input(kModel, Stage::Track));
    std::vector<TrackSeries> series;
    for (const auto& term : cfg.terms) series.push_back(term_distances(model, term));
    for (const auto& dyad : cfg.dyads) series.push_back(dyad_series(model, dyad));
    write_series_csv(series, out.path("tracks.csv"));
    write_series_svg(series, "Distance to each unit in the full factor space", out.path("tracks.svg"));
    return;
  }

  const bool kept = out.has(kKeptTable) && cfg.drop_singletons;
  const auto table = read_dense_csv(out.input(kept ? kKeptTable : kTable, Stage::Track));
  const auto seg = read_segmentation_csv(out.input(kept ? kKeptSegments : kSegmentation, Stage::Track), table.row_ids());
  const auto model = fit(table);
  std::vector<TrackSeries> series;
  std::ofstream closest(out.path("closest_segments.csv"), std::ios::binary);
  csv::write_row(closest, {"term", "segment_id", "first_id", "last_id", "size", "distance"});
  for (const auto& term : cfg.terms) {
    auto track = term_segment_distances(model, table, term, seg);
    csv::write_row(closest, {term, std::to_string(track.closest + 1), track.first_id, track.last_id,
                             std::to_string(track.size), csv::format_double(track.series.points[track.closest].distance)});
    series.push_back(std::move(track.series));
  }
  for (const auto& dyad : cfg.dyads) series.push_back(dyad_series(model, dyad));
  write_series_csv(series, out.path("tracks.csv"));
  write_series_svg(series, "Distance to each segment in the full factor space", out.path("tracks.svg"));
}

void append_contributors(std::ostringstream& text, const CAModel& model, const PointDiagnostics& diag, Side side,
                         Eigen::Index axis, double multiplier) {
  const auto result = top_contributors(model, diag, side, axis, multiplier);
  char buf[160];
  for (const auto* half : {&result.negative, &result.positive}) {
    std::snprintf(buf, sizeof buf, "  factor %ld %s:", static_cast<long>(axis + 1),
                  half == &result.negative ? "negative" : "positive");
    text << buf;
    if (half->empty()) text << " (none)";
    for (const auto& c : *half) text << ' ' << c.label;
    text << '\n';
  }
}

void report_stage(const PipelineConfig& cfg, Artifacts& out) {
  const auto model = read_model_json(out.input(kModel, Stage::Report));
  std::ostringstream text;
  char buf[160];
  text << "Correspondence analysis of " << model.rows() << " units x " << model.cols() << " words\n";
  std::snprintf(buf, sizeof buf, "total inertia %.6f over %ld axes\n\n", model.total_inertia,
                static_cast<long>(model.axes()));
  text << buf;
  text << "axis  eigenvalue  share%  cumulative%\n";
  const auto share = model.inertia_share();
  double cumulative = 0;
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(model.axes(), 10); ++k) {
    cumulative += share(k);
    std::snprintf(buf, sizeof buf, "%4ld  %10.6f  %6.2f  %11.2f\n", static_cast<long>(k + 1), model.eigenvalues(k),
                  100 * share(k), 100 * cumulative);
    text << buf;
  }
  if (model.axes() > 0) {
    const auto diag = diagnostics(model);
    for (const auto& plane : cfg.planes) {
      if (plane[0] >= model.axes() || plane[1] >= model.axes()) continue;
      for (Side side : {Side::Rows, Side::Columns}) {
        const double multiplier = side == Side::Rows ? cfg.row_multiplier : cfg.col_multiplier;
        std::snprintf(buf, sizeof buf, "\n%s contributing more than %g x the mean, plane %ld-%ld\n",
                      side == Side::Rows ? "Units" : "Words", multiplier, static_cast<long>(plane[0] + 1),
                      static_cast<long>(plane[1] + 1));
        text << buf;
        for (auto axis : plane) append_contributors(text, model, diag, side, axis, multiplier);
      }
    }
  }
  out.write_text("report.txt", text.str());
}

}  // namespace

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::Ingest: return "ingest";
    case Stage::Table: return "table";
    case Stage::Ca: return "ca";
    case Stage::Cluster: return "cluster";
    case Stage::Segment: return "segment";
    case Stage::Track: return "track";
    case Stage::Report: return "report";
  }
  return "unknown";
}

std::optional<Stage> stage_from_name(const std::string& name) {
  for (Stage s : {Stage::Ingest, Stage::Table, Stage::Ca, Stage::Cluster, Stage::Segment, Stage::Track, Stage::Report}) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

std::vector<std::string> run_stage(const PipelineConfig& config, Stage stage, const Logger& log) {
  Artifacts out(config.output_dir, log);
  try {
    config.validate();
    fs::create_directories(config.output_dir);
    if (log) log("stage " + stage_name(stage));
    switch (stage) {
      case Stage::Ingest: ingest_stage(config, out); break;
      case Stage::Table: table_stage(config, out); break;
      case Stage::Ca: ca_stage(config, out); break;
      case Stage::Cluster: cluster_stage(config, out); break;
      case Stage::Segment:
        if (!config.seed) throw Error("segment needs a seed");
        segment_stage(config, out);
        break;
      case Stage::Track: track_stage(config, out); break;
      case Stage::Report: report_stage(config, out); break;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    std::error_code ec;
    for (const auto& f : out.written()) fs::remove(config.output_dir / f, ec);
    throw StageError(stage, e.what());
  }
  return out.written();
}

std::vector<ManifestEntry> run(const PipelineConfig& config, const Logger& log) {
  const std::vector<Stage> stages{Stage::Ingest, Stage::Table, Stage::Ca,
                                  config.mode == ClusterMode::Segment ? Stage::Segment : Stage::Cluster,
                                  Stage::Track, Stage::Report};
  std::vector<std::string> written;
  try {
    for (Stage s : stages) {
      auto files = run_stage(config, s, log);
      written.insert(written.end(), files.begin(), files.end());
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& f : written) fs::remove(config.output_dir / f, ec);
    fs::remove(config.output_dir / kManifest, ec);
    throw;
  }
  return write_manifest(config.output_dir);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(byte, sizeof byte, "%02x", digest[k]);
    hex += byte;
  }
  return hex;
}

json manifest_to_json(const std::vector<ManifestEntry>& entries) {
  json files = json::array();
  for (const auto& e : entries) files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  return {{"files", files}};
}

std::vector<ManifestEntry> write_manifest(const fs::path& output_dir) {
  std::vector<ManifestEntry> entries;
  for (const auto& entry : fs::directory_iterator(output_dir)) {
    if (!entry.is_regular_file() || entry.path().filename() == kManifest) continue;
    entries.push_back({entry.path().filename().string(), entry.file_size(), sha256_file(entry.path())});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  std::ofstream out(output_dir / kManifest, std::ios::binary);
  if (!out) throw Error("cannot write manifest in '" + output_dir.string() + "'");
  out << manifest_to_json(entries).dump(1) << '\n';
  return entries;
}

void write_units_jsonl(const std::vector<TextUnit>& units, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& u : units) {
    json line{{"index", u.index}, {"id", u.id}, {"tokens", u.tokens}, {"raw", u.raw}};
    line["speaker"] = u.speaker ? json(*u.speaker) : json(nullptr);
    out << line.dump() << '\n';
  }
}

std::vector<TextUnit> read_units_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<TextUnit> units;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto obj = json::parse(line);
      TextUnit u;
      u.index = obj.at("index").get<std::size_t>();
      u.id = obj.at("id").get<std::string>();
      u.tokens = obj.at("tokens").get<std::vector<std::string>>();
      u.raw = obj.value("raw", std::string());
      if (obj.contains("speaker") && !obj.at("speaker").is_null()) u.speaker = obj.at("speaker").get<std::string>();
      if (u.index != units.size()) throw Error("unit indices are not consecutive");
      units.push_back(std::move(u));
    } catch (const std::exception& e) {
      throw Error("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (units.empty()) throw Error("no units in '" + path + "'");
  return units;
}

}  // namespace narrative
