#include "narrative/text_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <clocale>
#include <fstream>
#include <map>
#include <sstream>

#include <locale.h>
#include <wctype.h>

#include <nlohmann/json.hpp>

#include "narrative/csv.hpp"
#include "narrative/error.hpp"

namespace narrative {
namespace {

// glibc's C.UTF-8 carries the full Unicode character class tables.
locale_t unicode_locale() {
  static const locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
    if (!l) l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(nullptr));
    return l;
  }();
  return loc;
}

bool is_combining_mark(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF) ||
         (cp >= 0xFE20 && cp <= 0xFE2F);
}

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  if (auto loc = unicode_locale()) return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
  return cp;
}

bool is_space(char32_t cp) {
  if (cp < 0x80) return cp == ' ' || (cp >= '\t' && cp <= '\r');
  if (auto loc = unicode_locale()) return iswspace_l(static_cast<wint_t>(cp), loc) != 0 || cp == 0xA0;
  return cp == 0xA0;
}

bool is_digit(char32_t cp) {
  if (cp < 0x80) return cp >= '0' && cp <= '9';
  if (auto loc = unicode_locale()) return iswdigit_l(static_cast<wint_t>(cp), loc) != 0;
  return false;
}

// Decodes one UTF-8 sequence; malformed input yields U+FFFD and advances a byte.
char32_t decode(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

void check_nonempty(const std::vector<TextUnit>& units, const std::string& path) {
  if (units.empty()) throw Error("no units in '" + path + "'");
}

}  // namespace

bool is_alphabetic(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (is_combining_mark(cp)) return true;
  if (auto loc = unicode_locale()) return iswalpha_l(static_cast<wint_t>(cp), loc) != 0;
  return false;
}

NormalizationRules NormalizationRules::dialogue() { return NormalizationRules{}; }

NormalizationRules NormalizationRules::tweets() {
  NormalizationRules rules;
  rules.punctuation_to_blank = false;
  rules.apostrophe_to_blank = true;
  rules.strip_numerics = true;
  rules.mention_prefix_replacement = "xyz";
  rules.hashtag_prefix_replacement = "zyx";
  rules.ampersand_word = "and";
  return rules;
}

void NormalizationRules::validate() const {
  auto check = [](const std::string& value, const char* name) {
    for (std::size_t i = 0; i < value.size();) {
      if (!is_alphabetic(decode(value, i))) {
        throw Error(std::string("normalization: ") + name + " '" + value +
                    "' must contain only alphabetic characters");
      }
    }
  };
  check(mention_prefix_replacement, "mention_prefix_replacement");
  check(hashtag_prefix_replacement, "hashtag_prefix_replacement");
  check(ampersand_word, "ampersand_word");
}

std::vector<std::string> normalize(std::string_view raw, const NormalizationRules& rules) {
  std::string text(raw);
  if (!rules.ampersand_word.empty()) {
    const std::string padded = " " + rules.ampersand_word + " ";
    text = replace_all(std::move(text), "&amp;", padded);
    text = replace_all(std::move(text), "&", padded);
  }

  constexpr char32_t kBlank = U' ';
  std::u32string mapped;
  mapped.reserve(text.size());
  auto append_word = [&](const std::string& word) {
    for (std::size_t k = 0; k < word.size();) mapped.push_back(decode(word, k));
  };
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = decode(text, i);
    if (is_alphabetic(cp)) {
      mapped.push_back(rules.lowercase ? to_lower(cp) : cp);
    } else if (is_space(cp)) {
      mapped.push_back(kBlank);
    } else if (is_digit(cp)) {
      if (!rules.strip_numerics) mapped.push_back(kBlank);
    } else if (cp == U'@' && !rules.mention_prefix_replacement.empty()) {
      append_word(rules.mention_prefix_replacement);
    } else if (cp == U'#' && !rules.hashtag_prefix_replacement.empty()) {
      append_word(rules.hashtag_prefix_replacement);
    } else if ((cp == U'\'' || cp == U'’') && rules.apostrophe_to_blank) {
      mapped.push_back(kBlank);
    } else if (rules.punctuation_to_blank) {
      mapped.push_back(kBlank);
    }
  }

  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (!rules.stoplist || !rules.stoplist->contains(word)) tokens.push_back(word);
    word.clear();
  };
  for (char32_t cp : mapped) {
    if (cp == kBlank) {
      flush();
    } else {
      // Replacement words may need lower-casing too.
      encode(rules.lowercase ? to_lower(cp) : cp, word);
    }
  }
  flush();
  return tokens;
}

UnitAggregationMap UnitAggregationMap::identity(const std::vector<TextUnit>& units) {
  UnitAggregationMap map;
  for (const auto& u : units) map.groups.push_back({u.id, u.index, u.index});
  return map;
}

UnitAggregationMap UnitAggregationMap::from_csv(const std::string& path,
                                                const std::vector<TextUnit>& units) {
  std::map<std::string, std::size_t> by_id;
  for (const auto& u : units) by_id.emplace(u.id, u.index);

  UnitAggregationMap map;
  const auto records = csv::read_file(path);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() < 3) {
      throw Error("aggregation map '" + path + "' line " + std::to_string(rec.line) +
                  ": expected group_id,first_id,last_id");
    }
    const std::string group = trim(rec.fields[0]);
    const std::string first = trim(rec.fields[1]);
    const std::string last = trim(rec.fields[2]);
    const auto fi = by_id.find(first);
    const auto li = by_id.find(last);
    if (fi == by_id.end() || li == by_id.end()) {
      if (r == 0) continue;  // header
      throw Error("aggregation map '" + path + "' line " + std::to_string(rec.line) +
                  ": unknown unit id '" + (fi == by_id.end() ? first : last) + "'");
    }
    map.groups.push_back({group, fi->second, li->second});
  }
  if (map.groups.empty()) throw Error("aggregation map '" + path + "' has no groups");
  return map;
}

std::vector<TextUnit> load_dialogue_csv(const std::string& path, const NormalizationRules& rules) {
  rules.validate();
  const auto records = csv::read_file(path);
  std::vector<TextUnit> units;
  std::optional<long long> previous;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = "'" + path + "' line " + std::to_string(rec.line);
    const auto seq = rec.fields.empty() ? std::nullopt : parse_integer(trim(rec.fields[0]));
    if (!seq) {
      if (r == 0) continue;  // header
      throw Error("malformed row at " + where + ": sequence number is not an integer");
    }
    if (rec.fields.size() < 3) {
      throw Error("malformed row at " + where + ": expected sequence,name,expression");
    }
    if (previous && *seq <= *previous) {
      throw Error("non-monotone sequence number " + std::to_string(*seq) + " at " + where);
    }
    previous = seq;

    // Unquoted commas inside the expression split it; glue the pieces back.
    std::string expression = rec.fields[2];
    for (std::size_t k = 3; k < rec.fields.size(); ++k) expression += "," + rec.fields[k];
    expression = trim(expression);

    TextUnit unit;
    unit.index = units.size();
    unit.id = std::to_string(*seq);
    unit.speaker = trim(rec.fields[1]);
    unit.tokens = normalize(expression, rules);
    unit.raw = std::move(expression);
    units.push_back(std::move(unit));
  }
  check_nonempty(units, path);
  return units;
}

std::vector<TextUnit> split_lines(const std::string& path, std::size_t block_size,
                                  const NormalizationRules& rules) {
  if (block_size == 0) throw Error("split_lines: block_size must be at least 1");
  rules.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }

  std::vector<TextUnit> units;
  for (std::size_t start = 0; start < lines.size(); start += block_size) {
    const std::size_t stop = std::min(lines.size(), start + block_size);
    TextUnit unit;
    unit.index = units.size();
    unit.id = std::to_string(units.size() + 1);
    for (std::size_t k = start; k < stop; ++k) {
      if (k > start) unit.raw.push_back('\n');
      unit.raw += lines[k];
      auto tokens = normalize(lines[k], rules);
      unit.tokens.insert(unit.tokens.end(), std::make_move_iterator(tokens.begin()),
                         std::make_move_iterator(tokens.end()));
    }
    units.push_back(std::move(unit));
  }
  check_nonempty(units, path);
  return units;
}

std::vector<TextUnit> load_tweet_stream(const std::string& path, const NormalizationRules& rules) {
  rules.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  struct Tweet {
    std::string timestamp;
    std::string text;
  };
  std::vector<Tweet> tweets;

  const auto first_char = content.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (first_char != std::string::npos && content[first_char] == '{') {
    std::istringstream lines(content);
    std::size_t line_no = 0;
    for (std::string line; std::getline(lines, line);) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        const auto obj = nlohmann::json::parse(line);
        tweets.push_back({obj.at("timestamp").get<std::string>(), obj.at("text").get<std::string>()});
      } catch (const nlohmann::json::exception& e) {
        throw Error("malformed tweet at '" + path + "' line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  } else {
    std::istringstream stream(content);
    const auto records = csv::parse(stream);
    if (records.empty()) throw Error("no units in '" + path + "'");
    const auto& header = records.front().fields;
    std::size_t ts_col = header.size();
    std::size_t text_col = header.size();
    for (std::size_t k = 0; k < header.size(); ++k) {
      const auto name = trim(header[k]);
      if (name == "timestamp") ts_col = k;
      if (name == "text") text_col = k;
    }
    if (ts_col == header.size() || text_col == header.size()) {
      throw Error("tweet CSV '" + path + "' needs a header with 'timestamp' and 'text' columns");
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& f = records[r].fields;
      if (f.size() <= std::max(ts_col, text_col)) {
        throw Error("malformed tweet row at '" + path + "' line " + std::to_string(records[r].line));
      }
      tweets.push_back({trim(f[ts_col]), f[text_col]});
    }
  }
  if (tweets.empty()) throw Error("no units in '" + path + "'");

  const bool ascending = std::is_sorted(tweets.begin(), tweets.end(),
                                        [](const Tweet& a, const Tweet& b) { return a.timestamp < b.timestamp; });
  const bool descending = std::is_sorted(tweets.begin(), tweets.end(),
                                         [](const Tweet& a, const Tweet& b) { return a.timestamp > b.timestamp; });
  if (!ascending && !descending) throw Error("tweet timestamps in '" + path + "' are not monotone");
  if (!ascending) std::reverse(tweets.begin(), tweets.end());

  std::vector<TextUnit> units;
  units.reserve(tweets.size());
  for (auto& t : tweets) {
    TextUnit unit;
    unit.index = units.size();
    unit.id = t.timestamp;
    unit.tokens = normalize(t.text, rules);
    unit.raw = std::move(t.text);
    units.push_back(std::move(unit));
  }
  return units;
}

std::vector<TextUnit> aggregate(const std::vector<TextUnit>& units, const UnitAggregationMap& map) {
  std::vector<TextUnit> out;
  std::optional<std::size_t> previous_last;
  for (const auto& g : map.groups) {
    if (g.first_index > g.last_index || g.last_index >= units.size()) {
      throw Error("aggregate: group '" + g.group_id + "' range is out of range");
    }
    if (previous_last && g.first_index <= *previous_last) {
      throw Error("aggregate: group '" + g.group_id + "' overlaps or precedes the previous group");
    }
    previous_last = g.last_index;

    TextUnit unit;
    unit.index = out.size();
    unit.id = g.group_id;
    unit.speaker = units[g.first_index].speaker;
    for (std::size_t k = g.first_index; k <= g.last_index; ++k) {
      const auto& member = units[k];
      if (unit.speaker != member.speaker) unit.speaker.reset();
      unit.tokens.insert(unit.tokens.end(), member.tokens.begin(), member.tokens.end());
      if (k > g.first_index) unit.raw.push_back('\n');
      unit.raw += member.raw;
    }
    out.push_back(std::move(unit));
  }
  return out;
}

std::vector<std::string> speaker_names(const std::vector<TextUnit>& units) {
  std::vector<std::string> names;
  for (const auto& u : units) {
    if (u.speaker && std::find(names.begin(), names.end(), *u.speaker) == names.end()) {
      names.push_back(*u.speaker);
    }
  }
  return names;
}

Eigen::MatrixXd speaker_indicators(const std::vector<TextUnit>& units) {
  const auto names = speaker_names(units);
  Eigen::MatrixXd indicators = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units.size()),
                                                     static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!units[i].speaker) continue;
    const auto it = std::find(names.begin(), names.end(), *units[i].speaker);
    indicators(static_cast<Eigen::Index>(i), it - names.begin()) = 1.0;
  }
  return indicators;
}

}  // namespace narrative
