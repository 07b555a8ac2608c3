#include "doctest.h"

#include "cova/features.hpp"
#include "helpers.hpp"

using namespace cova;

namespace {

WebElement element(std::string tag, std::optional<std::string> text, BBox box = {0, 0, 40, 30}) {
  WebElement e;
  e.tag = std::move(tag);
  e.text = std::move(text);
  e.bbox = box;
  return e;
}

// Minimal encoder, kept separate from the library decoder.
std::string encode(char32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s += static_cast<char>(cp);
  } else if (cp < 0x800) {
    s += static_cast<char>(0xC0 | (cp >> 6));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    s += static_cast<char>(0xE0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    s += static_cast<char>(0xF0 | (cp >> 18));
    s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return s;
}

}  // namespace

TEST_CASE("price text") {
  TagVocabulary vocab({"SPAN", "IMG", "DIV"});
  auto f = heuristic_features(element("SPAN", "$ 12.99"), vocab);
  CHECK(f.has_currency == 1);
  CHECK(f.has_number == 1);
  CHECK(f.has_text == 1);
  CHECK(f.num_words == 2);
  CHECK(f.num_chars == 7);
  CHECK(f.tag_onehot == std::vector<double>{1, 0, 0});
  CHECK(f.flatten().size() == heuristic_dim(vocab));
  CHECK(heuristic_column_names(vocab).size() == heuristic_dim(vocab));
}

TEST_CASE("image box") {
  TagVocabulary vocab({"SPAN", "IMG"});
  auto f = heuristic_features(element("IMG", std::nullopt, {10, 20, 400, 300}), vocab);
  CHECK(f.bbox_feats[4] == doctest::Approx(4.0 / 3.0));
  CHECK(f.bbox_feats[0] == 10);
  CHECK(f.has_text == 0);
  CHECK(f.num_words == 0);
  CHECK(f.font_size == 0);
  CHECK(f.tag_onehot == std::vector<double>{0, 1});
}

TEST_CASE("unknown tag has an all-zero one-hot") {
  TagVocabulary vocab({"SPAN", "IMG"});
  auto f = heuristic_features(element("MARQUEE", "hi"), vocab);
  CHECK(f.tag_onehot == std::vector<double>{0, 0});
  CHECK(vocab.index_of("MARQUEE") == -1);
}

TEST_CASE("zero height gives zero aspect") {
  auto f = heuristic_features(element("DIV", std::nullopt, {0, 0, 10, 0}), TagVocabulary({"DIV"}));
  CHECK(f.bbox_feats[4] == 0.0);
}

TEST_CASE("currency markers") {
  CHECK(contains_currency(encode(0x20AC) + "5"));  // euro sign
  CHECK(contains_currency("Rs 500"));
  CHECK(contains_currency("500 USD"));
  CHECK_FALSE(contains_currency("Hours: 9-5"));
  CHECK_FALSE(contains_currency("USDA certified"));
  CHECK_FALSE(contains_currency("plain words"));
}

TEST_CASE("word counting") {
  CHECK(count_words("") == 0);
  CHECK(count_words("   ") == 0);
  CHECK(count_words(" a  b\tc\n") == 3);
  CHECK(count_words("one" + encode(0x3000) + "two") == 2);  // ideographic space
}

TEST_CASE("property: has_number agrees with an independent scan") {
  // Nd digits, and lookalikes that are not Nd (superscripts, vulgar fractions, roman numerals, letters).
  const char32_t digits[] = {'0', '7', 0x0663, 0x06F5, 0x0967, 0xFF19, 0x1D7D8, 0x0E52};
  const char32_t others[] = {'a', 'Z', ' ', '.', '$', 0x00B2, 0x00BD, 0x2160, 0x2155, 0x4E00, 0x00E9, 0x1F600};
  Rng rng(21);
  TagVocabulary vocab({"SPAN"});
  for (int t = 0; t < 2000; ++t) {
    std::string text;
    bool expect = false;
    const int len = static_cast<int>(rng.uniform_int(0, 12));
    for (int i = 0; i < len; ++i) {
      if (rng.bernoulli(0.08)) {
        text += encode(digits[rng.uniform_int(0, 7)]);
        expect = true;
      } else {
        text += encode(others[rng.uniform_int(0, 11)]);
      }
    }
    CHECK(contains_digit(text) == expect);
    CHECK(heuristic_features(element("SPAN", text), vocab).has_number == (expect ? 1 : 0));
  }
}

TEST_CASE("vocabulary from pages ranks by frequency then name") {
  Webpage p;
  for (const char* tag : {"SPAN", "DIV", "SPAN", "IMG", "DIV", "A"}) p.elements.push_back(element(tag, std::nullopt));
  auto vocab = TagVocabulary::from_pages({&p}, 3);
  CHECK(vocab.tags() == std::vector<std::string>{"DIV", "SPAN", "A"});
}

TEST_CASE("feature csv has one row per element") {
  Rng rng(2);
  auto page = cova::testing::random_page(rng, 4);
  auto csv = feature_matrix_csv(page, TagVocabulary({"SPAN", "IMG"}));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.rfind("element_id,tag_SPAN,tag_IMG,has_currency", 0) == 0);
}
