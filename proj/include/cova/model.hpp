#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <map>
#include <string>
#include <vector>

#include "cova/backbone.hpp"
#include "cova/dom.hpp"
#include "cova/graph.hpp"
#include "cova/nn.hpp"
#include "cova/roi_pool.hpp"

#include "json.hpp"

namespace cova {

struct ModelConfig {
  RoiSize roi{3, 3};
  int pos_dim = 32;
  int proj_dim = 384;
  int hidden_dim = 128;
  double dropout = 0.2;
  double leaky_slope = 0.01;
  bool use_context = true;
  bool use_positional = true;
  // Heuristic tag/text/box features appended to the visual representation.
  bool use_extra_features = false;
  bool freeze_backbone = false;
  BackboneConfig backbone;
  std::vector<std::string> tag_vocabulary;

  void validate() const;
  int roi_dim() const { return backbone.channels * roi.height * roi.width; }
  int heuristic_dim() const;
  int visual_dim() const;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct VisualRepr {
  Vec vec;
};

struct ContextRepr {
  Vec vec;
  // neighbour element id -> attention weight
  std::map<int, double> attn;
};

// (x, y, w, h, w/h) straight from the box.
std::array<double, 5> raw_positional(const BBox& box);
// Encoder input: boxes widened to at least 1px, x,y,w,h divided by the viewport side,
// w/h clamped to [0, 20].
Vec positional_input(const BBox& box, Viewport viewport = {});
// ReLU(weight * input + bias), weight P x 5, bias 1 x P. The model inserts batch norm before the ReLU.
Vec positional_encode(const BBox& box, const Mat& weight, const Mat& bias, Viewport viewport = {});

// LeakyReLU(a^T [W1 v_i || W2 v_j]) for every neighbour row j.
Vec attention_logits(const Vec& v_i, const Mat& neighbors, const Mat& w1, const Mat& w2, const Mat& a,
                     double leaky_slope);
// Softmax of the logits over exactly the given neighbours, max-subtracted.
// Throws EmptyNeighborhoodError for an empty neighbourhood.
Vec attention_scores(const Vec& v_i, const Mat& neighbors, const Mat& w1, const Mat& w2, const Mat& a,
                     double leaky_slope);
// sum_j alpha_j W2 v_j; the zero vector of W2's row count when there are no neighbours.
ContextRepr context_repr(const std::vector<int>& neighbor_ids, const Mat& neighbors, const Vec& alpha, const Mat& w2);

Vec softmax(const Vec& logits);

// One page's worth of network inputs.
struct PageInputs {
  const Webpage* page = nullptr;
  const ContextGraph* graph = nullptr;
  // N x roi_dim pooled backbone features, rows in element order.
  const Mat* pooled = nullptr;
};

struct ForwardOutput {
  Mat logits;   // rows: elements of all pages in input order
  Mat visual;   // v_i
  Mat context;  // c_i
  std::vector<std::vector<int>> neighbor_rows;
  std::vector<std::vector<double>> attention;
  std::vector<int> page_offsets;  // first row of each page, plus the total at the end
};

class CovaModel {
public:
  CovaModel(ModelConfig config, std::uint64_t seed);
  CovaModel(const CovaModel&) = delete;
  CovaModel& operator=(const CovaModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const Backbone& backbone() const { return backbone_; }

  // Every learnable array, backbone first.
  std::vector<NamedParam> params();
  // params() minus the backbone when it is frozen.
  std::vector<NamedParam> trainable_params();
  std::vector<NamedBuffer> buffers();
  void zero_grad();
  void copy_state_from(CovaModel& other);

  Param& param(const std::string& name);

  // Pooled features for every element of a page, rows in element order.
  Mat pool_page(const Webpage& page, const FeatureMap& fmap, std::vector<RoiPooled>* keep = nullptr) const;
  Mat positional_inputs(const Webpage& page) const;
  Mat heuristic_inputs(const Webpage& page) const;

  // Batched forward. Training mode uses batch statistics and dropout (drawn from `rng`).
  // Keeps what backward() needs; one forward/backward pair at a time.
  ForwardOutput forward(const std::vector<PageInputs>& pages, bool training, Rng* rng = nullptr);
  // Accumulates parameter gradients; returns d(loss)/d(pooled) stacked like the inputs.
  Mat backward(const Mat& dlogits);

  // Screenshot to N x 4 logits in inference mode.
  Mat forward_page(const Webpage& page, const ContextGraph& graph, const Image& screenshot);
  ForwardOutput forward_page_full(const Webpage& page, const ContextGraph& graph, const Image& screenshot);

  // Inference-mode head on a single [v || c]; c is ignored (zeros) when context is disabled.
  Vec classify(const VisualRepr& v, const ContextRepr& c);

private:
  void check_inputs(const std::vector<PageInputs>& pages) const;

  ModelConfig config_;
  Backbone backbone_;
  Param pos_w_, pos_b_;
  BatchNorm1d pos_bn_;
  Param w1_, w2_, att_;
  Param fc1_w_, fc1_b_;
  BatchNorm1d head_bn_;
  Param fc2_w_, fc2_b_;

  struct Cache {
    bool training = false;
    Mat positional_in, pos_pre, visual, keys, x, hidden_pre, hidden_act, dropout_mask;
    Vec s, w1a;
    std::vector<std::vector<int>> nb;
    std::vector<std::vector<double>> alpha, u;
  } cache_;
};

// Binary checkpoint: magic, JSON header (model config, extra metadata, array manifest), float64 payload.
void save_checkpoint(const std::filesystem::path& path, CovaModel& model, const nlohmann::json& meta = {});
struct LoadedCheckpoint {
  std::unique_ptr<CovaModel> model;
  nlohmann::json meta;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cova
