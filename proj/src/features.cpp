#include "cova/features.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "json.hpp"
#include "utf8.hpp"

namespace cova {

TagVocabulary::TagVocabulary(std::vector<std::string> tags) : tags_(std::move(tags)) {}

TagVocabulary TagVocabulary::from_pages(const std::vector<const Webpage*>& pages, std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const auto* page : pages) {
    for (const auto& e : page->elements) ++counts[e.tag];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < ranked.size() && i < max_size; ++i) tags.push_back(ranked[i].first);
  return TagVocabulary(std::move(tags));
}

int TagVocabulary::index_of(std::string_view tag) const {
  auto it = std::find(tags_.begin(), tags_.end(), tag);
  return it == tags_.end() ? -1 : static_cast<int>(it - tags_.begin());
}

namespace {

struct Range {
  char32_t lo, hi;
};

// General category Sc.
constexpr Range kCurrency[] = {
    {0x0024, 0x0024}, {0x00A2, 0x00A5}, {0x058F, 0x058F}, {0x060B, 0x060B}, {0x07FE, 0x07FF},
    {0x09F2, 0x09F3}, {0x09FB, 0x09FB}, {0x0AF1, 0x0AF1}, {0x0BF9, 0x0BF9}, {0x0E3F, 0x0E3F},
    {0x17DB, 0x17DB}, {0x20A0, 0x20C0}, {0xA838, 0xA838}, {0xFDFC, 0xFDFC}, {0xFE69, 0xFE69},
    {0xFF04, 0xFF04}, {0xFFE0, 0xFFE1}, {0xFFE5, 0xFFE6}, {0x11FDD, 0x11FE0}, {0x1E2FF, 0x1E2FF},
    {0x1ECB0, 0x1ECB0},
};

// First codepoint of each run of ten Nd digits.
constexpr char32_t kDigitZeros[] = {
    0x0030, 0x0660, 0x06F0, 0x07C0, 0x0966, 0x09E6, 0x0A66, 0x0AE6, 0x0B66, 0x0BE6, 0x0C66,
    0x0CE6, 0x0D66, 0x0DE6, 0x0E50, 0x0ED0, 0x0F20, 0x1040, 0x1090, 0x17E0, 0x1810, 0x1946,
    0x19D0, 0x1A80, 0x1A90, 0x1B50, 0x1BB0, 0x1C40, 0x1C50, 0xA620, 0xA8D0, 0xA900, 0xA9D0,
    0xA9F0, 0xAA50, 0xABF0, 0xFF10, 0x104A0, 0x10D30, 0x11066, 0x110F0, 0x11136, 0x111D0,
    0x112F0, 0x11450, 0x114D0, 0x11650, 0x116C0, 0x11730, 0x118E0, 0x11950, 0x11C50, 0x11D50,
    0x11DA0, 0x11F50, 0x16A60, 0x16AC0, 0x16B50, 0x1E140, 0x1E2F0, 0x1E4F0, 0x1E950, 0x1FBF0,
};

constexpr std::string_view kCurrencyWords[] = {"USD", "EUR", "GBP", "Rs", "RMB"};

bool ascii_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

}  // namespace

bool is_currency_codepoint(char32_t cp) {
  return std::any_of(std::begin(kCurrency), std::end(kCurrency), [cp](Range r) { return cp >= r.lo && cp <= r.hi; });
}

bool is_decimal_digit(char32_t cp) {
  if (cp >= 0x1D7CE && cp <= 0x1D7FF) return true;  // mathematical digits, five runs back to back
  return std::any_of(std::begin(kDigitZeros), std::end(kDigitZeros),
                     [cp](char32_t zero) { return cp >= zero && cp < zero + 10; });
}

bool is_unicode_space(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
         cp == 0x3000;
}

int count_words(std::string_view utf8) {
  int words = 0;
  bool in_word = false;
  for (char32_t cp : detail::decode_utf8(utf8)) {
    bool space = is_unicode_space(cp);
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

bool contains_currency(std::string_view utf8) {
  for (char32_t cp : detail::decode_utf8(utf8)) {
    if (is_currency_codepoint(cp)) return true;
  }
  // Alphabetic codes count only as whole words so "Hours" does not match "Rs".
  for (auto word : kCurrencyWords) {
    for (auto pos = utf8.find(word); pos != std::string_view::npos; pos = utf8.find(word, pos + 1)) {
      bool left = pos == 0 || !ascii_letter(utf8[pos - 1]);
      auto end = pos + word.size();
      bool right = end >= utf8.size() || !ascii_letter(utf8[end]);
      if (left && right) return true;
    }
  }
  return false;
}

bool contains_digit(std::string_view utf8) {
  auto cps = detail::decode_utf8(utf8);
  return std::any_of(cps.begin(), cps.end(), is_decimal_digit);
}

std::vector<double> HeuristicFeatures::flatten() const {
  std::vector<double> out(tag_onehot);
  out.insert(out.end(), {static_cast<double>(has_currency), static_cast<double>(has_text),
                         static_cast<double>(has_number), font_size, static_cast<double>(num_words),
                         static_cast<double>(num_chars)});
  out.insert(out.end(), bbox_feats.begin(), bbox_feats.end());
  return out;
}

std::size_t heuristic_dim(const TagVocabulary& vocab) { return vocab.size() + kHeuristicExtraDims; }

std::vector<std::string> heuristic_column_names(const TagVocabulary& vocab) {
  std::vector<std::string> names;
  for (const auto& t : vocab.tags()) names.push_back("tag_" + t);
  for (const char* n : {"has_currency", "has_text", "has_number", "font_size", "num_words", "num_chars", "x", "y",
                        "w", "h", "aspect"}) {
    names.emplace_back(n);
  }
  return names;
}

HeuristicFeatures heuristic_features(const WebElement& e, const TagVocabulary& vocab, Viewport viewport) {
  HeuristicFeatures f;
  f.tag_onehot.assign(vocab.size(), 0.0);
  if (int idx = vocab.index_of(e.tag); idx >= 0) f.tag_onehot[idx] = 1.0;
  f.font_size = e.font_size.value_or(0.0);
  if (e.text) {
    const std::string& t = *e.text;
    f.num_words = count_words(t);
    f.num_chars = static_cast<int>(detail::decode_utf8(t).size());
    f.has_text = f.num_words > 0 ? 1 : 0;
    f.has_currency = contains_currency(t) ? 1 : 0;
    f.has_number = contains_digit(t) ? 1 : 0;
  }
  BBox b = clip_to_viewport(e.bbox, viewport.width, viewport.height);
  f.bbox_feats = {b.x, b.y, b.w, b.h, b.h > 0 ? b.w / b.h : 0.0};
  return f;
}

std::string feature_manifest_json(const TagVocabulary& vocab) {
  nlohmann::ordered_json doc;
  doc["dim"] = heuristic_dim(vocab);
  doc["tag_vocabulary"] = vocab.tags();
  doc["columns"] = heuristic_column_names(vocab);
  doc["binary_columns"] = vocab.size() + 3;
  return doc.dump(2);
}

std::string feature_matrix_csv(const Webpage& page, const TagVocabulary& vocab) {
  std::string out = "element_id";
  for (const auto& n : heuristic_column_names(vocab)) out += "," + n;
  out += "\n";
  for (const auto& e : page.elements) {
    out += std::to_string(e.element_id);
    for (double v : heuristic_features(e, vocab).flatten()) {
      nlohmann::json j = v;
      out += "," + j.dump();
    }
    out += "\n";
  }
  return out;
}

}  // namespace cova
