#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cova/dataset.hpp"
#include "cova/eval.hpp"
#include "cova/graph.hpp"
#include "cova/model.hpp"

#include "json.hpp"

namespace cova {

struct TrainConfig {
  double lr = 5e-4;
  int batch_pages = 5;
  double weight_decay = 1e-3;
  int max_epochs = 50;
  bool bg_sampling = true;
  double bg_sample_frac = 0.9;
  int early_stop_patience = 5;
  std::uint64_t seed = 0;
  int k = 24;
  DistanceMetric metric = DistanceMetric::Preorder;

  // Model switches.
  bool use_context = true;
  bool use_positional = true;
  bool use_extra_features = false;
  bool freeze_backbone = false;
  BackboneKind backbone = BackboneKind::SmallConv;
  int backbone_channels = 64;
  int pos_dim = 32;
  int proj_dim = 384;
  int hidden_dim = 128;
  double dropout = 0.2;

  void validate() const;
  ModelConfig model_config(std::vector<std::string> tag_vocabulary = {}) const;
};

struct EpochReport {
  int epoch = 0;
  double train_loss = 0.0;
  ClassScores val{};
  double val_mean = 0.0;
  double wall_time = 0.0;
};

nlohmann::json to_json(const EpochReport& r);

// Every labeled element plus floor(frac * B) background elements drawn without replacement.
std::set<int> sample_background(const Webpage& page, double frac, Rng& rng);

// Mean cross-entropy over rows with mask[i] != 0. Writes d(loss)/d(logits) when asked.
double cross_entropy(const Mat& logits, const std::vector<Label>& labels, const std::vector<char>& mask,
                     Mat* dlogits = nullptr);

struct TrainOptions {
  // Screenshots for the backbone; defaults to reading page.screenshot_ref.
  ImageLoader loader = load_screenshot;
  // Precomputed pooled features for a frozen backbone built from the same seed.
  const PooledCache* pooled = nullptr;
  std::function<void(const EpochReport&)> on_epoch;
};

struct TrainResult {
  std::unique_ptr<CovaModel> model;  // parameters of the best validation epoch
  std::vector<EpochReport> reports;
  int best_epoch = 0;
  bool stopped_early = false;
};

// Throws EmptyDatasetError without training pages, ValidationError when train and validation share a
// domain, DivergenceError on a non-finite loss.
TrainResult train(const std::vector<const Webpage*>& train_pages, const std::vector<const Webpage*>& val_pages,
                  const TrainConfig& config, const TrainOptions& options = {});

// Inference over pages, one page at a time.
std::vector<Prediction> predict_pages(CovaModel& model, const std::vector<const Webpage*>& pages, int k,
                                      DistanceMetric metric, const ImageLoader& loader = load_screenshot,
                                      const PooledCache* pooled = nullptr);

}  // namespace cova
