#pragma once

#include <filesystem>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "cova/dom.hpp"
#include "cova/nn.hpp"
#include "cova/rng.hpp"

namespace cova::testing {

inline Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Elements with random distinct ids and a random preorder permutation (storage order != preorder).
inline std::vector<WebElement> random_elements(Rng& rng, int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::set<int> used;
  std::vector<WebElement> els;
  for (int i = 0; i < n; ++i) {
    WebElement e;
    do {
      e.element_id = static_cast<int>(rng.uniform_int(0, 1'000'000));
    } while (!used.insert(e.element_id).second);
    e.preorder_index = order[static_cast<std::size_t>(i)];
    e.bbox = {rng.uniform(0, 1200), rng.uniform(0, 1200), rng.uniform(1, 300), rng.uniform(1, 200)};
    e.tag = "DIV";
    els.push_back(e);
  }
  return els;
}

// Page whose elements are in preorder, labels cycling PRICE, TITLE, IMAGE, BACKGROUND...
inline Webpage random_page(Rng& rng, int n, std::string id = "page") {
  Webpage page;
  page.page_id = std::move(id);
  page.domain = "example.test";
  for (int i = 0; i < n; ++i) {
    WebElement e;
    e.element_id = 100 + i;
    e.preorder_index = i;
    e.bbox = {rng.uniform(0, 1200), rng.uniform(0, 1200), rng.uniform(1, 300), rng.uniform(1, 200)};
    e.tag = i % 2 ? "SPAN" : "IMG";
    e.label = i < 3 ? static_cast<Label>(i) : Label::Background;
    page.elements.push_back(e);
  }
  page.fully_labeled = n >= 3;
  return page;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("cova_" + tag + "_" + std::to_string(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace cova::testing
