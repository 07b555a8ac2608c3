#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cova/dom.hpp"
#include "cova/nn.hpp"

#include "json.hpp"

namespace cova {

// Per-class accuracies in PRICE, TITLE, IMAGE order.
using ClassScores = std::array<double, 3>;

inline double mean_score(const ClassScores& s) { return (s[0] + s[1] + s[2]) / 3.0; }

struct Prediction {
  std::string page_id;
  int price_id = -1;
  int title_id = -1;
  int image_id = -1;
  // Element ids in row order and, per class, a softmax over elements of that class's logit column.
  std::vector<int> element_ids;
  Mat probs;  // N x 4

  int id(Label label) const;
};

// Each target class independently picks the element with the highest logit in its column
// (equivalently the highest column-softmax probability). Ties go to the earlier row, i.e. the
// smaller preorder index, since rows are in preorder.
Prediction predict_page(const Mat& logits, const std::vector<int>& element_ids, std::string page_id = {});
Prediction predict_page(const Mat& logits, const Webpage& page);

// Fraction of pages whose predicted id equals the true id, per class.
// Throws MissingTruthError when a page has no complete ground truth.
ClassScores cross_domain_accuracy(const std::vector<Prediction>& preds, const std::map<std::string, LabelManifest>& truth);

// Credit when the true element is among the k most probable for its class (k clamped to N).
ClassScores topk_accuracy(const std::vector<Prediction>& preds, const std::map<std::string, LabelManifest>& truth, int k);

// Ground truth read off labeled pages.
std::map<std::string, LabelManifest> truth_from_pages(const std::vector<const Webpage*>& pages);

struct FoldSplit {
  int fold_id = 0;
  std::vector<std::string> train_domains;
  std::vector<std::string> val_domains;
  std::vector<std::string> test_domains;
};

// Domain-disjoint folds. The n_folds largest domains (by page count, ties by name) go one per test
// group, the rest are shuffled with the seed and dealt round-robin. Fold f tests group f, validates on
// group (f+1) mod n and trains on the rest. Throws TooFewDomainsError below n_folds domains.
std::vector<FoldSplit> make_folds(const std::map<std::string, int>& domain_page_counts, int n_folds, std::uint64_t seed);
std::vector<FoldSplit> make_folds(const std::vector<const Webpage*>& pages, int n_folds, std::uint64_t seed);

nlohmann::json folds_to_json(const std::vector<FoldSplit>& folds);
std::vector<FoldSplit> folds_from_json(const nlohmann::json& j);

struct ScoreSummary {
  ClassScores mean{};
  ClassScores stddev{};
};
// Mean and sample standard deviation across folds (std 0 for a single fold).
ScoreSummary summarize(const std::vector<ClassScores>& per_fold);

}  // namespace cova
