#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace narrative {

/// Character-level rules applied before a text is cut into word tokens.
///
/// Punctuation is any character that is neither alphabetic, a digit nor
/// whitespace. With `punctuation_to_blank` it separates words, otherwise it
/// is deleted and the letters around it join. Apostrophes (ASCII and U+2019)
/// follow `apostrophe_to_blank` when set and the punctuation rule otherwise.
/// Digits are deleted with `strip_numerics` and act as separators without it.
struct NormalizationRules {
  bool lowercase = true;
  bool punctuation_to_blank = true;
  bool apostrophe_to_blank = true;
  bool strip_numerics = false;
  /// Each '@' is replaced by this string; empty means '@' is punctuation.
  std::string mention_prefix_replacement;
  /// Each '#' is replaced by this string; empty means '#' is punctuation.
  std::string hashtag_prefix_replacement;
  /// "&amp;" and a bare '&' become this word; empty means punctuation.
  std::string ampersand_word;
  std::optional<std::set<std::string>> stoplist;

  /// Dialogue and novel text: lower case, punctuation to blank, tool words kept.
  static NormalizationRules dialogue();
  /// Tweet streams: "@" -> "xyz", "#" -> "zyx", "&amp;" -> "and",
  /// apostrophes to blank, other punctuation and digits deleted.
  static NormalizationRules tweets();

  /// Throws if a replacement string has a non-alphabetic character.
  void validate() const;
};

struct TextUnit {
  std::size_t index = 0;
  std::string id;
  std::optional<std::string> speaker;
  std::vector<std::string> tokens;
  std::string raw;
};

struct UnitGroup {
  std::string group_id;
  std::size_t first_index = 0;
  std::size_t last_index = 0;
};

/// Ordered, disjoint ranges of unit indices, each collapsed into one unit.
struct UnitAggregationMap {
  std::vector<UnitGroup> groups;

  static UnitAggregationMap identity(const std::vector<TextUnit>& units);
  /// CSV with columns (group_id, first_id, last_id) naming unit ids, as in a
  /// scene table listing the first and last utterance of each scene.
  static UnitAggregationMap from_csv(const std::string& path, const std::vector<TextUnit>& units);
};

/// True when the code point counts as a letter for tokenization.
bool is_alphabetic(char32_t cp);

std::vector<std::string> normalize(std::string_view raw, const NormalizationRules& rules);

/// Rows of (sequence, name, expression); an optional header row is skipped.
std::vector<TextUnit> load_dialogue_csv(const std::string& path, const NormalizationRules& rules);

/// Consecutive blocks of `block_size` lines; the last block may be short.
std::vector<TextUnit> split_lines(const std::string& path, std::size_t block_size,
                                  const NormalizationRules& rules);

/// Tweets from CSV (columns timestamp,text with header) or JSON lines
/// ({"timestamp": ..., "text": ...}). Newest-first files are reversed.
std::vector<TextUnit> load_tweet_stream(const std::string& path, const NormalizationRules& rules);

std::vector<TextUnit> aggregate(const std::vector<TextUnit>& units, const UnitAggregationMap& map);

/// Distinct speakers in order of first appearance.
std::vector<std::string> speaker_names(const std::vector<TextUnit>& units);

/// units x speakers 0/1 matrix over `speaker_names(units)`.
Eigen::MatrixXd speaker_indicators(const std::vector<TextUnit>& units);

}  // namespace narrative
