#include "cova/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cova/error.hpp"
#include "cova/features.hpp"
#include "cova/optim.hpp"

namespace cova {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_pages < 1) throw ConfigError("batch_pages must be at least 1");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (bg_sample_frac < 0.0 || bg_sample_frac > 1.0) throw ConfigError("bg_sample_frac must be in [0, 1]");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be at least 1");
  if (k < 0) throw ConfigError("k must be nonnegative");
  model_config(use_extra_features ? std::vector<std::string>{"DIV"} : std::vector<std::string>{}).validate();
}

ModelConfig TrainConfig::model_config(std::vector<std::string> tag_vocabulary) const {
  ModelConfig m;
  m.pos_dim = pos_dim;
  m.proj_dim = proj_dim;
  m.hidden_dim = hidden_dim;
  m.dropout = dropout;
  m.use_context = use_context;
  m.use_positional = use_positional;
  m.use_extra_features = use_extra_features;
  m.freeze_backbone = freeze_backbone;
  m.backbone.kind = backbone;
  m.backbone.channels = backbone_channels;
  m.tag_vocabulary = std::move(tag_vocabulary);
  return m;
}

nlohmann::json to_json(const EpochReport& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"val", {{"price", r.val[0]}, {"title", r.val[1]}, {"image", r.val[2]}}},
          {"val_mean", r.val_mean},
          {"wall_time", r.wall_time}};
}

std::set<int> sample_background(const Webpage& page, double frac, Rng& rng) {
  std::set<int> keep;
  std::vector<int> background;
  for (const auto& e : page.elements) {
    if (e.label == Label::Background) {
      background.push_back(e.element_id);
    } else {
      keep.insert(e.element_id);
    }
  }
  const auto take = static_cast<std::size_t>(std::floor(frac * static_cast<double>(background.size())));
  // Partial Fisher-Yates: the first `take` slots end up a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                      static_cast<std::int64_t>(background.size()) - 1));
    std::swap(background[i], background[j]);
    keep.insert(background[i]);
  }
  return keep;
}

double cross_entropy(const Mat& logits, const std::vector<Label>& labels, const std::vector<char>& mask, Mat* dlogits) {
  const auto n = logits.rows();
  if (logits.cols() != kNumClasses || static_cast<Eigen::Index>(labels.size()) != n ||
      static_cast<Eigen::Index>(mask.size()) != n) {
    throw ShapeError("cross_entropy: logits, labels and mask disagree");
  }
  long count = 0;
  for (char m : mask) count += m ? 1 : 0;
  if (dlogits) dlogits->setZero(n, kNumClasses);
  if (count == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double m = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
    const double z = e.sum();
    const auto y = static_cast<Eigen::Index>(labels[i]);
    total += std::log(z) + m - logits(i, y);
    if (dlogits) {
      dlogits->row(i) = e / (z * static_cast<double>(count));
      (*dlogits)(i, y) -= 1.0 / static_cast<double>(count);
    }
  }
  return total / static_cast<double>(count);
}

namespace {

struct PageState {
  const Webpage* page;
  ContextGraph graph;
  Mat pooled;  // filled per batch unless the backbone is frozen
};

std::vector<PageState> prepare(const std::vector<const Webpage*>& pages, const TrainConfig& cfg) {
  std::vector<PageState> out;
  out.reserve(pages.size());
  for (const Webpage* p : pages) {
    ContextGraph g = build_graph(p->elements, cfg.k, cfg.metric, p->dom.get());
    g.page_id = p->page_id;
    out.push_back({p, std::move(g), {}});
  }
  return out;
}

void fill_pooled(std::vector<PageState>& pages, const CovaModel& model, const TrainOptions& opt) {
  for (auto& s : pages) {
    if (opt.pooled) {
      auto it = opt.pooled->find(s.page->page_id);
      if (it == opt.pooled->end()) throw ConfigError("pooled cache misses page " + s.page->page_id);
      s.pooled = it->second;
    } else {
      s.pooled = model.pool_page(*s.page, model.backbone().forward(opt.loader(*s.page), false));
    }
  }
}

ClassScores validate_pages(CovaModel& model, const std::vector<PageState>& pages) {
  std::vector<Prediction> preds;
  std::vector<const Webpage*> ptrs;
  for (const auto& s : pages) {
    ForwardOutput out = model.forward({PageInputs{s.page, &s.graph, &s.pooled}}, false);
    preds.push_back(predict_page(out.logits, *s.page));
    ptrs.push_back(s.page);
  }
  return cross_domain_accuracy(preds, truth_from_pages(ptrs));
}

std::vector<Mat> snapshot(CovaModel& model) {
  std::vector<Mat> s;
  for (auto& p : model.params()) s.push_back(p.param->value);
  for (auto& b : model.buffers()) s.push_back(*b.buffer);
  return s;
}

void restore(CovaModel& model, const std::vector<Mat>& s) {
  std::size_t i = 0;
  for (auto& p : model.params()) p.param->value = s[i++];
  for (auto& b : model.buffers()) *b.buffer = s[i++];
}

}  // namespace

TrainResult train(const std::vector<const Webpage*>& train_pages, const std::vector<const Webpage*>& val_pages,
                  const TrainConfig& cfg, const TrainOptions& opt) {
  cfg.validate();
  if (train_pages.empty()) throw EmptyDatasetError("no training pages");
  std::set<std::string> train_domains;
  for (const Webpage* p : train_pages) train_domains.insert(p->domain);
  for (const Webpage* p : val_pages) {
    if (train_domains.contains(p->domain)) throw ValidationError("domain " + p->domain + " is in both train and val");
  }
  for (const Webpage* p : train_pages) {
    if (!p->fully_labeled) throw MissingTruthError("training page " + p->page_id + " is not fully labeled");
  }
  if (opt.pooled && !cfg.freeze_backbone) throw ConfigError("a pooled cache needs freeze_backbone = true");

  std::vector<std::string> vocab;
  if (cfg.use_extra_features) vocab = TagVocabulary::from_pages(train_pages).tags();
  TrainResult result;
  result.model = std::make_unique<CovaModel>(cfg.model_config(vocab), cfg.seed);
  CovaModel& model = *result.model;

  auto train_state = prepare(train_pages, cfg);
  auto val_state = prepare(val_pages, cfg);
  const bool frozen = cfg.freeze_backbone;
  if (frozen) {
    fill_pooled(train_state, model, opt);
    fill_pooled(val_state, model, opt);
  }

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.weight_decay = cfg.weight_decay;
  Adam adam(model.trainable_params(), adam_cfg);

  double best = -std::numeric_limits<double>::infinity();
  std::vector<Mat> best_state = snapshot(model);
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(Rng::derive(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train_state.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_pages)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_pages));
      std::vector<PageState*> batch;
      for (std::size_t i = b0; i < b1; ++i) batch.push_back(&train_state[order[i]]);
      if (!frozen) {
        for (PageState* s : batch) s->pooled = model.pool_page(*s->page, model.backbone().forward(opt.loader(*s->page), false));
      }
      std::vector<PageInputs> inputs;
      std::vector<Label> labels;
      std::vector<char> mask;
      for (PageState* s : batch) {
        inputs.push_back({s->page, &s->graph, &s->pooled});
        std::set<int> keep;
        if (cfg.bg_sampling) keep = sample_background(*s->page, cfg.bg_sample_frac, rng);
        for (const auto& e : s->page->elements) {
          labels.push_back(e.label);
          mask.push_back(!cfg.bg_sampling || keep.contains(e.element_id) ? 1 : 0);
        }
      }
      model.zero_grad();
      ForwardOutput out = model.forward(inputs, true, &rng);
      Mat dlogits;
      const double loss = cross_entropy(out.logits, labels, mask, &dlogits);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches));
      }
      Mat dpooled = model.backward(dlogits);
      if (!frozen) {
        for (std::size_t p = 0; p < batch.size(); ++p) {
          const Webpage& page = *batch[p]->page;
          FeatureMap fmap = model.backbone().forward(opt.loader(page), true);
          Tensor3 dmap(fmap.map.channels, fmap.map.height, fmap.map.width);
          for (std::size_t i = 0; i < page.size(); ++i) {
            RoiPooled r = roi_pool(fmap, page.elements[i].bbox, model.config().roi);
            roi_pool_backward(r, dpooled.row(out.page_offsets[p] + static_cast<Eigen::Index>(i)).transpose(), dmap);
          }
          model.backbone().backward(dmap);
        }
      }
      adam.step();
      loss_sum += loss;
      ++batches;
    }

    EpochReport rep;
    rep.epoch = epoch;
    rep.train_loss = loss_sum / static_cast<double>(batches);
    if (!val_state.empty()) {
      if (!frozen) fill_pooled(val_state, model, opt);
      rep.val = validate_pages(model, val_state);
      rep.val_mean = mean_score(rep.val);
    } else {
      // No validation pages: monitor the training loss instead.
      rep.val_mean = -rep.train_loss;
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.reports.push_back(rep);
    if (opt.on_epoch) opt.on_epoch(rep);

    if (rep.val_mean > best) {
      best = rep.val_mean;
      best_state = snapshot(model);
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      result.stopped_early = true;
      break;
    }
  }
  restore(model, best_state);
  return result;
}

std::vector<Prediction> predict_pages(CovaModel& model, const std::vector<const Webpage*>& pages, int k,
                                      DistanceMetric metric, const ImageLoader& loader, const PooledCache* pooled) {
  std::vector<Prediction> preds;
  preds.reserve(pages.size());
  for (const Webpage* p : pages) {
    ContextGraph g = build_graph(p->elements, k, metric, p->dom.get());
    Mat feats;
    if (pooled) {
      auto it = pooled->find(p->page_id);
      if (it == pooled->end()) throw ConfigError("pooled cache misses page " + p->page_id);
      feats = it->second;
    } else {
      feats = model.pool_page(*p, model.backbone().forward(loader(*p), false));
    }
    ForwardOutput out = model.forward({PageInputs{p, &g, &feats}}, false);
    preds.push_back(predict_page(out.logits, *p));
  }
  return preds;
}

}  // namespace cova
