#include <fstream>
#include <set>

#include "narrative/error.hpp"
#include "narrative/pipeline.hpp"

namespace narrative {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::set<std::string> read_word_list(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("config: cannot open stoplist '" + path.string() + "'");
  std::set<std::string> words;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    words.insert(line.substr(start));
  }
  return words;
}

NormalizationRules parse_rules(const json& doc, const fs::path& base) {
  NormalizationRules rules;
  const std::string preset = doc.value("preset", std::string("dialogue"));
  if (preset == "dialogue") {
    rules = NormalizationRules::dialogue();
  } else if (preset == "tweets") {
    rules = NormalizationRules::tweets();
  } else {
    throw Error("config: unknown normalization preset '" + preset + "'");
  }
  rules.lowercase = doc.value("lowercase", rules.lowercase);
  rules.punctuation_to_blank = doc.value("punctuation_to_blank", rules.punctuation_to_blank);
  rules.apostrophe_to_blank = doc.value("apostrophe_to_blank", rules.apostrophe_to_blank);
  rules.strip_numerics = doc.value("strip_numerics", rules.strip_numerics);
  rules.mention_prefix_replacement = doc.value("mention_prefix_replacement", rules.mention_prefix_replacement);
  rules.hashtag_prefix_replacement = doc.value("hashtag_prefix_replacement", rules.hashtag_prefix_replacement);
  rules.ampersand_word = doc.value("ampersand_word", rules.ampersand_word);
  if (doc.contains("stoplist") || doc.contains("stoplist_file")) {
    std::set<std::string> words;
    if (doc.contains("stoplist")) {
      for (const auto& w : doc.at("stoplist")) words.insert(w.get<std::string>());
    }
    if (doc.contains("stoplist_file")) {
      auto more = read_word_list(resolve(base, doc.at("stoplist_file").get<std::string>()));
      words.insert(more.begin(), more.end());
    }
    rules.stoplist = std::move(words);
  }
  rules.validate();
  return rules;
}

std::array<Eigen::Index, 2> parse_plane(const json& v) {
  if (!v.is_array() || v.size() != 2) throw Error("config: a plane is a pair of 1-based axis numbers");
  const auto a = v[0].get<Eigen::Index>();
  const auto b = v[1].get<Eigen::Index>();
  if (a < 1 || b < 1 || a == b) throw Error("config: plane axes must be distinct and start at 1");
  return {a - 1, b - 1};
}

}  // namespace

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
  try {
    PipelineConfig cfg;
    const auto& source = doc.at("source");
    cfg.source_path = resolve(base_dir, source.at("path").get<std::string>());
    const auto format = source.value("format", std::string("dialogue-csv"));
    if (format == "dialogue-csv") {
      cfg.format = SourceFormat::DialogueCsv;
    } else if (format == "plain-text") {
      cfg.format = SourceFormat::PlainText;
    } else if (format == "tweet-stream") {
      cfg.format = SourceFormat::TweetStream;
    } else {
      throw Error("config: unknown source format '" + format + "'");
    }

    cfg.rules = parse_rules(doc.value("normalization", json::object()), base_dir);

    if (doc.contains("units")) {
      const auto& units = doc.at("units");
      if (units.contains("block_size")) {
        const auto b = units.at("block_size").get<long long>();
        if (b < 1) throw Error("config: units.block_size must be at least 1");
        cfg.block_size = static_cast<std::size_t>(b);
      }
      if (units.contains("aggregation_map")) {
        cfg.aggregation_map = resolve(base_dir, units.at("aggregation_map").get<std::string>());
      }
    }

    if (doc.contains("filter")) {
      const auto& f = doc.at("filter");
      cfg.filter.min_units_per_word = f.value("min_units_per_word", cfg.filter.min_units_per_word);
      cfg.filter.min_total_per_word = f.value("min_total_per_word", cfg.filter.min_total_per_word);
      const auto scope = f.value("scope", std::string("units"));
      if (scope != "units" && scope != "source") throw Error("config: filter.scope must be 'units' or 'source'");
      cfg.filter_source_units = scope == "source";
    }

    if (doc.contains("ca")) {
      const auto& ca = doc.at("ca");
      if (ca.contains("planes")) {
        cfg.planes.clear();
        for (const auto& p : ca.at("planes")) cfg.planes.push_back(parse_plane(p));
      }
      cfg.plot_multiplier = ca.value("plot_multiplier", cfg.plot_multiplier);
    }

    if (doc.contains("clustering")) {
      const auto& c = doc.at("clustering");
      const auto feature = c.value("feature", std::string("coordinates"));
      if (feature == "coordinates") {
        cfg.feature = ClusterFeature::Coordinates;
      } else if (feature == "cos2") {
        cfg.feature = ClusterFeature::Cos2;
      } else {
        throw Error("config: clustering.feature must be 'coordinates' or 'cos2'");
      }
      const auto mode = c.value("mode", std::string("dendrogram"));
      if (mode == "dendrogram") {
        cfg.mode = ClusterMode::Dendrogram;
      } else if (mode == "segment") {
        cfg.mode = ClusterMode::Segment;
      } else {
        throw Error("config: clustering.mode must be 'dendrogram' or 'segment'");
      }
      if (c.contains("cut")) {
        const auto& cut = c.at("cut");
        if (cut.contains("k")) cfg.cut_count = cut.at("k").get<Eigen::Index>();
        if (cut.contains("height")) cfg.cut_height = cut.at("height").get<double>();
      }
      cfg.alpha = c.value("alpha", cfg.alpha);
      cfg.n_perm = c.value("n_perm", cfg.n_perm);
      if (c.contains("seed")) cfg.seed = c.at("seed").get<std::uint64_t>();
      cfg.drop_singletons = c.value("drop_singletons", cfg.drop_singletons);
    }

    if (doc.contains("tracking")) {
      const auto& t = doc.at("tracking");
      cfg.terms = t.value("terms", std::vector<std::string>{});
      for (const auto& d : t.value("dyads", json::array())) {
        if (!d.is_array() || d.size() != 2) throw Error("config: a dyad is a [subject, partner] pair");
        cfg.dyads.push_back({d[0].get<std::string>(), d[1].get<std::string>()});
      }
    }

    if (doc.contains("report")) {
      const auto& r = doc.at("report");
      cfg.row_multiplier = r.value("row_multiplier", cfg.row_multiplier);
      cfg.col_multiplier = r.value("col_multiplier", cfg.col_multiplier);
    }

    cfg.output_dir = resolve(base_dir, doc.value("output", std::string("out")));
    return cfg;
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config '" + path.string() + "': " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

void PipelineConfig::validate() const {
  if (!fs::exists(source_path)) throw Error("config: source '" + source_path.string() + "' does not exist");
  if (aggregation_map && !fs::exists(*aggregation_map)) {
    throw Error("config: aggregation map '" + aggregation_map->string() + "' does not exist");
  }
  if (block_size && format != SourceFormat::PlainText) {
    throw Error("config: units.block_size applies to plain-text sources only");
  }
  if (format == SourceFormat::PlainText && !block_size) throw Error("config: plain-text sources need units.block_size");
  filter.validate();
  if (filter_source_units && !aggregation_map) throw Error("config: filter.scope 'source' needs units.aggregation_map");
  if (mode == ClusterMode::Segment) {
    if (!seed) throw Error("config: clustering.seed is required when mode is 'segment'");
    if (!(alpha >= 0 && alpha < 1)) throw Error("config: clustering.alpha must lie in [0, 1)");
    if (n_perm < 99) throw Error("config: clustering.n_perm must be at least 99");
  }
  if (cut_count && *cut_count < 1) throw Error("config: clustering.cut.k must be at least 1");
  if (cut_height && !(*cut_height >= 0)) throw Error("config: clustering.cut.height must be non-negative");
  if (row_multiplier < 0 || col_multiplier < 0 || plot_multiplier < 0) {
    throw Error("config: contribution multipliers must be non-negative");
  }
  if (output_dir.empty()) throw Error("config: output directory is empty");
}

}  // namespace narrative
