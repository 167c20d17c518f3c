#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/contingency.hpp"
#include "narrative/text_ingest.hpp"
#include "narrative/tracker.hpp"

namespace narrative {

enum class SourceFormat { DialogueCsv, PlainText, TweetStream };
enum class ClusterFeature { Coordinates, Cos2 };
enum class ClusterMode { Dendrogram, Segment };

struct PipelineConfig {
  std::filesystem::path source_path;
  SourceFormat format = SourceFormat::DialogueCsv;
  NormalizationRules rules;
  std::optional<std::size_t> block_size;
  std::optional<std::filesystem::path> aggregation_map;
  FilterSpec filter;
  /// Apply `filter` to the units before aggregation and keep the retained
  /// words in the aggregated table.
  bool filter_source_units = false;

  /// 0-based factor planes exported as scatter data.
  std::vector<std::array<Eigen::Index, 2>> planes{{0, 1}};
  double plot_multiplier = 3.0;

  ClusterFeature feature = ClusterFeature::Coordinates;
  ClusterMode mode = ClusterMode::Dendrogram;
  std::optional<Eigen::Index> cut_count;
  std::optional<double> cut_height;
  double alpha = 0.1;
  int n_perm = 999;
  std::optional<std::uint64_t> seed;
  bool drop_singletons = true;

  std::vector<std::string> terms;
  std::vector<DyadSpec> dyads;

  double row_multiplier = 3.0;
  double col_multiplier = 3.0;

  std::filesystem::path output_dir;

  /// Checks referenced paths and cross-field requirements.
  void validate() const;
};

/// Reads a JSON config; relative paths resolve against the config's directory.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

enum class Stage { Ingest, Table, Ca, Cluster, Segment, Track, Report };

std::string stage_name(Stage stage);
std::optional<Stage> stage_from_name(const std::string& name);

/// Error tagged with the pipeline stage it came from.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& message)
      : Error("stage '" + stage_name(stage) + "': " + message), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

using Logger = std::function<void(const std::string&)>;

/// Runs one stage, reading upstream artifacts from the output directory.
/// Returns the files written, relative to the output directory.
std::vector<std::string> run_stage(const PipelineConfig& config, Stage stage, const Logger& log = {});

struct ManifestEntry {
  std::string path;
  std::uintmax_t bytes = 0;
  std::string sha256;
};

/// Every stage in order, then manifest.json. On failure, files written by
/// this call are removed and a StageError is thrown.
std::vector<ManifestEntry> run(const PipelineConfig& config, const Logger& log = {});

std::string sha256_file(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const std::vector<ManifestEntry>& entries);

/// Writes manifest.json over whatever artifacts exist in the output
/// directory, matching what `run` produces.
std::vector<ManifestEntry> write_manifest(const std::filesystem::path& output_dir);

void write_units_jsonl(const std::vector<TextUnit>& units, const std::string& path);
std::vector<TextUnit> read_units_jsonl(const std::string& path);

}  // namespace narrative
