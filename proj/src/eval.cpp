#include "cova/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cova/error.hpp"
#include "cova/rng.hpp"

namespace cova {

int Prediction::id(Label label) const {
  switch (label) {
    case Label::Price: return price_id;
    case Label::Title: return title_id;
    case Label::Image: return image_id;
    default: throw std::invalid_argument("no prediction for BACKGROUND");
  }
}

Prediction predict_page(const Mat& logits, const std::vector<int>& element_ids, std::string page_id) {
  if (logits.rows() == 0) throw ShapeError("predict_page: no elements");
  if (logits.cols() != kNumClasses || logits.rows() != static_cast<Eigen::Index>(element_ids.size())) {
    throw ShapeError("predict_page: logits do not match the element list");
  }
  Prediction p;
  p.page_id = std::move(page_id);
  p.element_ids = element_ids;
  p.probs.resize(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    auto e = (logits.col(c).array() - m).exp();
    p.probs.col(c) = e / e.sum();
  }
  auto best = [&](Label l) {
    const auto c = static_cast<Eigen::Index>(l);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < logits.rows(); ++i) {
      if (logits(i, c) > logits(arg, c)) arg = i;
    }
    return element_ids[static_cast<std::size_t>(arg)];
  };
  p.price_id = best(Label::Price);
  p.title_id = best(Label::Title);
  p.image_id = best(Label::Image);
  return p;
}

Prediction predict_page(const Mat& logits, const Webpage& page) {
  std::vector<int> ids;
  ids.reserve(page.size());
  for (const auto& e : page.elements) ids.push_back(e.element_id);
  return predict_page(logits, ids, page.page_id);
}

namespace {

const LabelManifest& truth_for(const Prediction& p, const std::map<std::string, LabelManifest>& truth) {
  auto it = truth.find(p.page_id);
  if (it == truth.end() || !it->second.complete()) throw MissingTruthError("no ground truth for page " + p.page_id);
  return it->second;
}

int true_id(const LabelManifest& t, int cls) {
  return cls == 0 ? *t.price_id : cls == 1 ? *t.title_id : *t.image_id;
}

}  // namespace

ClassScores cross_domain_accuracy(const std::vector<Prediction>& preds, const std::map<std::string, LabelManifest>& truth) {
  ClassScores acc{};
  if (preds.empty()) return acc;
  for (const auto& p : preds) {
    const auto& t = truth_for(p, truth);
    for (int c = 0; c < 3; ++c) acc[c] += p.id(kTargetLabels[c]) == true_id(t, c) ? 1.0 : 0.0;
  }
  for (double& a : acc) a /= static_cast<double>(preds.size());
  return acc;
}

ClassScores topk_accuracy(const std::vector<Prediction>& preds, const std::map<std::string, LabelManifest>& truth, int k) {
  if (k < 1) throw ConfigError("top-k needs k >= 1");
  ClassScores acc{};
  if (preds.empty()) return acc;
  for (const auto& p : preds) {
    const auto& t = truth_for(p, truth);
    const auto n = static_cast<int>(p.element_ids.size());
    const int kk = std::clamp(k, 0, n);
    for (int c = 0; c < 3; ++c) {
      auto it = std::find(p.element_ids.begin(), p.element_ids.end(), true_id(t, c));
      if (it == p.element_ids.end()) continue;
      const auto row = static_cast<Eigen::Index>(it - p.element_ids.begin());
      // Rank under the same ordering as predict_page: higher probability first, then earlier row.
      int ahead = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = p.probs(i, c), b = p.probs(row, c);
        if (a > b || (a == b && i < row)) ++ahead;
      }
      if (ahead < kk) acc[c] += 1.0;
    }
  }
  for (double& a : acc) a /= static_cast<double>(preds.size());
  return acc;
}

std::map<std::string, LabelManifest> truth_from_pages(const std::vector<const Webpage*>& pages) {
  std::map<std::string, LabelManifest> truth;
  for (const Webpage* page : pages) {
    LabelManifest m;
    m.page_id = page->page_id;
    for (const auto& e : page->elements) {
      if (e.label == Label::Price) m.price_id = e.element_id;
      if (e.label == Label::Title) m.title_id = e.element_id;
      if (e.label == Label::Image) m.image_id = e.element_id;
    }
    truth[page->page_id] = m;
  }
  return truth;
}

std::vector<FoldSplit> make_folds(const std::map<std::string, int>& counts, int n_folds, std::uint64_t seed) {
  if (n_folds < 3) throw ConfigError("make_folds needs at least 3 folds");
  if (static_cast<int>(counts.size()) < n_folds) {
    throw TooFewDomainsError(std::to_string(counts.size()) + " domains for " + std::to_string(n_folds) + " folds");
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::vector<std::string>> groups(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) groups[f].push_back(ranked[f].first);
  std::vector<std::string> rest;
  for (std::size_t i = static_cast<std::size_t>(n_folds); i < ranked.size(); ++i) rest.push_back(ranked[i].first);
  Rng rng(seed);
  rng.shuffle(rest);
  for (std::size_t i = 0; i < rest.size(); ++i) groups[i % n_folds].push_back(rest[i]);
  for (auto& g : groups) std::sort(g.begin(), g.end());

  std::vector<FoldSplit> folds;
  for (int f = 0; f < n_folds; ++f) {
    FoldSplit s;
    s.fold_id = f;
    s.test_domains = groups[f];
    s.val_domains = groups[(f + 1) % n_folds];
    for (int g = 0; g < n_folds; ++g) {
      if (g == f || g == (f + 1) % n_folds) continue;
      s.train_domains.insert(s.train_domains.end(), groups[g].begin(), groups[g].end());
    }
    std::sort(s.train_domains.begin(), s.train_domains.end());
    folds.push_back(std::move(s));
  }
  return folds;
}

std::vector<FoldSplit> make_folds(const std::vector<const Webpage*>& pages, int n_folds, std::uint64_t seed) {
  std::map<std::string, int> counts;
  for (const Webpage* p : pages) ++counts[p->domain];
  return make_folds(counts, n_folds, seed);
}

nlohmann::json folds_to_json(const std::vector<FoldSplit>& folds) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& f : folds) {
    j.push_back({{"fold", f.fold_id}, {"train", f.train_domains}, {"val", f.val_domains}, {"test", f.test_domains}});
  }
  return j;
}

std::vector<FoldSplit> folds_from_json(const nlohmann::json& j) {
  std::vector<FoldSplit> folds;
  try {
    for (const auto& e : j) {
      FoldSplit f;
      f.fold_id = e.at("fold").get<int>();
      f.train_domains = e.at("train").get<std::vector<std::string>>();
      f.val_domains = e.at("val").get<std::vector<std::string>>();
      f.test_domains = e.at("test").get<std::vector<std::string>>();
      std::set<std::string> seen;
      for (const auto* group : {&f.train_domains, &f.val_domains, &f.test_domains}) {
        for (const auto& d : *group) {
          if (!seen.insert(d).second) throw SchemaError("fold " + std::to_string(f.fold_id) + ": domain " + d + " in two sets");
        }
      }
      folds.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("folds: ") + e.what());
  }
  return folds;
}

ScoreSummary summarize(const std::vector<ClassScores>& per_fold) {
  ScoreSummary s;
  if (per_fold.empty()) return s;
  const double n = static_cast<double>(per_fold.size());
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (const auto& f : per_fold) sum += f[c];
    s.mean[c] = sum / n;
    double sq = 0.0;
    for (const auto& f : per_fold) sq += (f[c] - s.mean[c]) * (f[c] - s.mean[c]);
    s.stddev[c] = per_fold.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  }
  return s;
}

}  // namespace cova
