#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "cova/dom.hpp"

namespace cova {

// Fixed tag list; tags outside it one-hot to all zeros.
class TagVocabulary {
public:
  TagVocabulary() = default;
  explicit TagVocabulary(std::vector<std::string> tags);

  // The `max_size` most frequent tags over the given pages, ties broken by name.
  static TagVocabulary from_pages(const std::vector<const Webpage*>& pages, std::size_t max_size = 32);

  const std::vector<std::string>& tags() const { return tags_; }
  std::size_t size() const { return tags_.size(); }
  int index_of(std::string_view tag) const;

  friend bool operator==(const TagVocabulary&, const TagVocabulary&) = default;

private:
  std::vector<std::string> tags_;
};

struct HeuristicFeatures {
  std::vector<double> tag_onehot;
  double font_size = 0.0;
  int num_words = 0;
  int num_chars = 0;
  int has_currency = 0;
  int has_text = 0;
  int has_number = 0;
  // x, y, w, h, w/h in raw pixels; w/h is 0 when h is 0.
  std::array<double, 5> bbox_feats{};

  // Layout: one-hot, binaries (currency, text, number), numerics (font, words, chars), bbox.
  std::vector<double> flatten() const;
};

inline constexpr std::size_t kHeuristicExtraDims = 3 + 3 + 5;

std::size_t heuristic_dim(const TagVocabulary& vocab);
std::vector<std::string> heuristic_column_names(const TagVocabulary& vocab);

HeuristicFeatures heuristic_features(const WebElement& e, const TagVocabulary& vocab,
                                     Viewport viewport = {});

// Text predicates used by the features.
bool is_currency_codepoint(char32_t cp);
bool is_decimal_digit(char32_t cp);
bool is_unicode_space(char32_t cp);
int count_words(std::string_view utf8);
bool contains_currency(std::string_view utf8);
bool contains_digit(std::string_view utf8);

// Column manifest JSON and CSV rows (one per element) for feature export.
std::string feature_manifest_json(const TagVocabulary& vocab);
std::string feature_matrix_csv(const Webpage& page, const TagVocabulary& vocab);

}  // namespace cova
