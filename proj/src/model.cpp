#include "cova/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "cova/error.hpp"
#include "cova/features.hpp"

namespace cova {

using nlohmann::json;

void ModelConfig::validate() const {
  if (roi.height <= 0 || roi.width <= 0) throw ConfigError("roi size must be positive");
  if (pos_dim <= 0 || proj_dim <= 0 || hidden_dim <= 0 || backbone.channels <= 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (use_extra_features && tag_vocabulary.empty()) {
    throw ConfigError("extra features need a tag vocabulary");
  }
}

int ModelConfig::heuristic_dim() const {
  return use_extra_features ? static_cast<int>(tag_vocabulary.size() + kHeuristicExtraDims) : 0;
}

int ModelConfig::visual_dim() const { return roi_dim() + (use_positional ? pos_dim : 0) + heuristic_dim(); }

json to_json(const ModelConfig& c) {
  return json{{"roi_h", c.roi.height},
              {"roi_w", c.roi.width},
              {"pos_dim", c.pos_dim},
              {"proj_dim", c.proj_dim},
              {"hidden_dim", c.hidden_dim},
              {"dropout", c.dropout},
              {"leaky_slope", c.leaky_slope},
              {"use_context", c.use_context},
              {"use_positional", c.use_positional},
              {"use_extra_features", c.use_extra_features},
              {"freeze_backbone", c.freeze_backbone},
              {"backbone", backbone_name(c.backbone.kind)},
              {"backbone_channels", c.backbone.channels},
              {"input_side", c.backbone.input_side},
              {"pixel_mean", c.backbone.pixel_mean},
              {"pixel_std", c.backbone.pixel_std},
              {"tag_vocabulary", c.tag_vocabulary}};
}

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig c;
    c.roi = {j.at("roi_h").get<int>(), j.at("roi_w").get<int>()};
    c.pos_dim = j.at("pos_dim").get<int>();
    c.proj_dim = j.at("proj_dim").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.use_context = j.at("use_context").get<bool>();
    c.use_positional = j.at("use_positional").get<bool>();
    c.use_extra_features = j.at("use_extra_features").get<bool>();
    c.freeze_backbone = j.at("freeze_backbone").get<bool>();
    c.backbone.kind = backbone_from_name(j.at("backbone").get<std::string>());
    c.backbone.channels = j.at("backbone_channels").get<int>();
    c.backbone.input_side = j.at("input_side").get<int>();
    c.backbone.pixel_mean = j.at("pixel_mean").get<std::array<double, 3>>();
    c.backbone.pixel_std = j.at("pixel_std").get<std::array<double, 3>>();
    c.tag_vocabulary = j.at("tag_vocabulary").get<std::vector<std::string>>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model config: ") + e.what());
  }
}

std::array<double, 5> raw_positional(const BBox& b) {
  return {b.x, b.y, b.w, b.h, b.h > 0 ? b.w / b.h : 0.0};
}

Vec positional_input(const BBox& box, Viewport viewport) {
  const double w = std::max(box.w, 1.0), h = std::max(box.h, 1.0);
  Vec in(5);
  in << box.x / viewport.width, box.y / viewport.height, w / viewport.width, h / viewport.height,
      std::clamp(w / h, 0.0, 20.0);
  return in;
}

Vec positional_encode(const BBox& box, const Mat& weight, const Mat& bias, Viewport viewport) {
  if (weight.cols() != 5 || bias.cols() != weight.rows()) throw ShapeError("positional encoder shape mismatch");
  Vec z = weight * positional_input(box, viewport) + bias.row(0).transpose();
  return z.cwiseMax(0.0);
}

Vec softmax(const Vec& logits) {
  if (logits.size() == 0) return logits;
  Vec e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Vec attention_logits(const Vec& v_i, const Mat& neighbors, const Mat& w1, const Mat& w2, const Mat& a,
                     double leaky_slope) {
  const auto proj = w1.rows();
  if (w2.rows() != proj || a.size() != 2 * proj || w1.cols() != v_i.size() || w2.cols() != neighbors.cols()) {
    throw ShapeError("attention parameter shape mismatch");
  }
  Eigen::Map<const Vec> a_flat(a.data(), a.size());
  const double left = a_flat.head(proj).dot(w1 * v_i);
  Vec right = (neighbors * w2.transpose()) * a_flat.tail(proj);
  Vec u = right.array() + left;
  return u.unaryExpr([leaky_slope](double x) { return x > 0.0 ? x : leaky_slope * x; });
}

Vec attention_scores(const Vec& v_i, const Mat& neighbors, const Mat& w1, const Mat& w2, const Mat& a,
                     double leaky_slope) {
  if (neighbors.rows() == 0) throw EmptyNeighborhoodError("attention over an empty neighbourhood");
  return softmax(attention_logits(v_i, neighbors, w1, w2, a, leaky_slope));
}

ContextRepr context_repr(const std::vector<int>& neighbor_ids, const Mat& neighbors, const Vec& alpha, const Mat& w2) {
  if (static_cast<Eigen::Index>(neighbor_ids.size()) != neighbors.rows() || alpha.size() != neighbors.rows()) {
    throw ShapeError("context: neighbour count mismatch");
  }
  ContextRepr c;
  c.vec = Vec::Zero(w2.rows());
  if (neighbors.rows() == 0) return c;
  c.vec = w2 * (neighbors.transpose() * alpha);
  for (std::size_t j = 0; j < neighbor_ids.size(); ++j) c.attn[neighbor_ids[j]] = alpha[static_cast<Eigen::Index>(j)];
  return c;
}

CovaModel::CovaModel(ModelConfig config, std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      backbone_(config_.backbone, Rng::derive(seed, 1)),
      pos_w_(config_.pos_dim, 5),
      pos_b_(1, config_.pos_dim),
      pos_bn_(config_.pos_dim),
      w1_(config_.proj_dim, config_.visual_dim()),
      w2_(config_.proj_dim, config_.visual_dim()),
      att_(1, 2 * config_.proj_dim),
      fc1_w_(config_.hidden_dim, config_.visual_dim() + config_.proj_dim),
      fc1_b_(1, config_.hidden_dim),
      head_bn_(config_.hidden_dim),
      fc2_w_(kNumClasses, config_.hidden_dim),
      fc2_b_(1, kNumClasses) {
  Rng rng(Rng::derive(seed, 2));
  init_uniform_fan_in(pos_w_.value, 5, rng);
  init_uniform_fan_in(pos_b_.value, 5, rng);
  init_uniform_fan_in(w1_.value, w1_.value.cols(), rng);
  init_uniform_fan_in(w2_.value, w2_.value.cols(), rng);
  init_uniform_fan_in(att_.value, config_.proj_dim, rng);
  init_uniform_fan_in(fc1_w_.value, fc1_w_.value.cols(), rng);
  init_uniform_fan_in(fc1_b_.value, fc1_w_.value.cols(), rng);
  init_uniform_fan_in(fc2_w_.value, fc2_w_.value.cols(), rng);
  init_uniform_fan_in(fc2_b_.value, fc2_w_.value.cols(), rng);
}

std::vector<NamedParam> CovaModel::params() {
  std::vector<NamedParam> p;
  std::vector<NamedBuffer> unused;
  backbone_.collect(p, unused);
  p.push_back({"pos.weight", &pos_w_});
  p.push_back({"pos.bias", &pos_b_});
  pos_bn_.collect("pos_bn", p, unused);
  p.push_back({"gat.w1", &w1_});
  p.push_back({"gat.w2", &w2_});
  p.push_back({"gat.a", &att_});
  p.push_back({"head.fc1.weight", &fc1_w_});
  p.push_back({"head.fc1.bias", &fc1_b_});
  head_bn_.collect("head_bn", p, unused);
  p.push_back({"head.fc2.weight", &fc2_w_});
  p.push_back({"head.fc2.bias", &fc2_b_});
  return p;
}

std::vector<NamedParam> CovaModel::trainable_params() {
  auto p = params();
  if (config_.freeze_backbone) {
    std::erase_if(p, [](const NamedParam& n) { return n.name.starts_with("backbone."); });
  }
  return p;
}

std::vector<NamedBuffer> CovaModel::buffers() {
  std::vector<NamedParam> unused;
  std::vector<NamedBuffer> b;
  backbone_.collect(unused, b);
  pos_bn_.collect("pos_bn", unused, b);
  head_bn_.collect("head_bn", unused, b);
  return b;
}

void CovaModel::zero_grad() {
  for (auto& p : params()) p.param->zero_grad();
}

Param& CovaModel::param(const std::string& name) {
  for (auto& p : params()) {
    if (p.name == name) return *p.param;
  }
  throw ConfigError("no parameter named " + name);
}

void CovaModel::copy_state_from(CovaModel& other) {
  auto dst = params();
  auto src = other.params();
  if (dst.size() != src.size()) throw ShapeError("copy_state_from: architecture mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i].param->value = src[i].param->value;
  auto bdst = buffers();
  auto bsrc = other.buffers();
  for (std::size_t i = 0; i < bdst.size(); ++i) *bdst[i].buffer = *bsrc[i].buffer;
}

Mat CovaModel::pool_page(const Webpage& page, const FeatureMap& fmap, std::vector<RoiPooled>* keep) const {
  Mat out(static_cast<Eigen::Index>(page.size()), config_.roi_dim());
  if (keep) keep->clear();
  for (std::size_t i = 0; i < page.size(); ++i) {
    RoiPooled r = roi_pool(fmap, page.elements[i].bbox, config_.roi);
    out.row(static_cast<Eigen::Index>(i)) = r.values.transpose();
    if (keep) keep->push_back(std::move(r));
  }
  return out;
}

Mat CovaModel::positional_inputs(const Webpage& page) const {
  Viewport vp = page.dom ? page.dom->viewport() : Viewport{};
  Mat out(static_cast<Eigen::Index>(page.size()), 5);
  for (std::size_t i = 0; i < page.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = positional_input(page.elements[i].bbox, vp).transpose();
  }
  return out;
}

Mat CovaModel::heuristic_inputs(const Webpage& page) const {
  Viewport vp = page.dom ? page.dom->viewport() : Viewport{};
  TagVocabulary vocab(config_.tag_vocabulary);
  const int hd = config_.heuristic_dim();
  Mat out(static_cast<Eigen::Index>(page.size()), hd);
  for (std::size_t i = 0; i < page.size(); ++i) {
    HeuristicFeatures f = heuristic_features(page.elements[i], vocab, vp);
    std::vector<double> row = f.flatten();
    // Model-side scaling of the raw feature block.
    const std::size_t t = vocab.size();
    row[t + 3] /= 32.0;                            // font size
    row[t + 4] = std::log1p(row[t + 4]);           // words
    row[t + 5] = std::log1p(row[t + 5]);           // chars
    row[t + 6] /= vp.width;
    row[t + 7] /= vp.height;
    row[t + 8] /= vp.width;
    row[t + 9] /= vp.height;
    row[t + 10] = std::clamp(row[t + 10], 0.0, 20.0);
    for (int k = 0; k < hd; ++k) out(static_cast<Eigen::Index>(i), k) = row[k];
  }
  return out;
}

void CovaModel::check_inputs(const std::vector<PageInputs>& pages) const {
  for (const auto& p : pages) {
    if (!p.page || !p.pooled) throw ShapeError("page inputs incomplete");
    if (p.pooled->rows() != static_cast<Eigen::Index>(p.page->size()) || p.pooled->cols() != config_.roi_dim()) {
      throw ShapeError("pooled features have the wrong shape");
    }
    if (config_.use_context && !p.graph) throw ShapeError("context enabled but no graph given");
  }
}

ForwardOutput CovaModel::forward(const std::vector<PageInputs>& pages, bool training, Rng* rng) {
  check_inputs(pages);
  const ModelConfig& c = config_;
  ForwardOutput out;
  Eigen::Index total = 0;
  for (const auto& p : pages) {
    out.page_offsets.push_back(static_cast<int>(total));
    total += static_cast<Eigen::Index>(p.page->size());
  }
  out.page_offsets.push_back(static_cast<int>(total));

  const int roi_dim = c.roi_dim();
  const int pos_cols = c.use_positional ? c.pos_dim : 0;
  const int vdim = c.visual_dim();
  Cache& k = cache_;
  k = Cache{};
  k.training = training;

  Mat visual(total, vdim);
  k.positional_in.resize(total, 5);
  for (std::size_t p = 0; p < pages.size(); ++p) {
    const Eigen::Index r0 = out.page_offsets[p], n = static_cast<Eigen::Index>(pages[p].page->size());
    visual.block(r0, 0, n, roi_dim) = *pages[p].pooled;
    k.positional_in.middleRows(r0, n) = positional_inputs(*pages[p].page);
    if (c.use_extra_features) visual.block(r0, roi_dim + pos_cols, n, c.heuristic_dim()) = heuristic_inputs(*pages[p].page);
  }
  if (c.use_positional) {
    Mat z = k.positional_in * pos_w_.value.transpose();
    z.rowwise() += pos_b_.value.row(0);
    k.pos_pre = pos_bn_.forward(z, training);
    visual.middleCols(roi_dim, pos_cols) = k.pos_pre.cwiseMax(0.0);
  }

  // Neighbour rows, page-local ids mapped to global rows.
  k.nb.assign(static_cast<std::size_t>(total), {});
  if (c.use_context) {
    for (std::size_t p = 0; p < pages.size(); ++p) {
      const Webpage& page = *pages[p].page;
      std::map<int, int> row_of;
      for (std::size_t i = 0; i < page.size(); ++i) row_of[page.elements[i].element_id] = out.page_offsets[p] + static_cast<int>(i);
      for (std::size_t i = 0; i < page.size(); ++i) {
        auto it = pages[p].graph->neighbors.find(page.elements[i].element_id);
        if (it == pages[p].graph->neighbors.end()) throw ShapeError("graph does not cover element");
        auto& rows = k.nb[out.page_offsets[p] + i];
        for (int id : it->second) {
          auto r = row_of.find(id);
          if (r == row_of.end()) throw ShapeError("graph neighbour is not an element of the page");
          rows.push_back(r->second);
        }
      }
    }
  }

  Mat context = Mat::Zero(total, c.proj_dim);
  k.alpha.assign(static_cast<std::size_t>(total), {});
  k.u.assign(static_cast<std::size_t>(total), {});
  if (c.use_context) {
    const Eigen::Index proj = c.proj_dim;
    Eigen::Map<const Vec> a1(att_.value.data(), proj);
    Eigen::Map<const Vec> a2(att_.value.data() + proj, proj);
    // a1^T W1 v_i only needs the folded vector W1^T a1.
    k.w1a = w1_.value.transpose() * a1;
    k.s = visual * k.w1a;
    k.keys.noalias() = visual * w2_.value.transpose();
    Vec t = k.keys * a2;
    const double slope = c.leaky_slope;
    for (Eigen::Index i = 0; i < total; ++i) {
      const auto& rows = k.nb[i];
      if (rows.empty()) continue;
      std::vector<double> u(rows.size()), e(rows.size());
      double emax = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < rows.size(); ++j) {
        u[j] = k.s[i] + t[rows[j]];
        e[j] = u[j] > 0.0 ? u[j] : slope * u[j];
        emax = std::max(emax, e[j]);
      }
      double sum = 0.0;
      for (double& v : e) sum += (v = std::exp(v - emax));
      for (double& v : e) v /= sum;
      for (std::size_t j = 0; j < rows.size(); ++j) context.row(i) += e[j] * k.keys.row(rows[j]);
      k.alpha[i] = std::move(e);
      k.u[i] = std::move(u);
    }
  }

  k.x.resize(total, vdim + c.proj_dim);
  k.x.leftCols(vdim) = visual;
  k.x.rightCols(c.proj_dim) = context;
  Mat h = k.x * fc1_w_.value.transpose();
  h.rowwise() += fc1_b_.value.row(0);
  k.hidden_pre = head_bn_.forward(h, training);
  k.hidden_act = k.hidden_pre.cwiseMax(0.0);
  if (training && c.dropout > 0.0) {
    if (!rng) throw ConfigError("dropout needs a random generator");
    const double keep = 1.0 - c.dropout;
    k.dropout_mask.resize(total, c.hidden_dim);
    for (Eigen::Index i = 0; i < k.dropout_mask.size(); ++i) {
      k.dropout_mask.data()[i] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    }
    k.hidden_act = k.hidden_act.cwiseProduct(k.dropout_mask);
  }
  out.logits = k.hidden_act * fc2_w_.value.transpose();
  out.logits.rowwise() += fc2_b_.value.row(0);

  k.visual = visual;
  out.visual = std::move(visual);
  out.context = std::move(context);
  out.neighbor_rows = k.nb;
  out.attention = k.alpha;
  return out;
}

Mat CovaModel::backward(const Mat& dlogits) {
  const ModelConfig& c = config_;
  Cache& k = cache_;
  if (dlogits.rows() != k.x.rows() || dlogits.cols() != kNumClasses) throw ShapeError("dlogits shape mismatch");
  const Eigen::Index total = dlogits.rows();
  const int roi_dim = c.roi_dim();
  const int vdim = c.visual_dim();

  fc2_w_.grad.noalias() += dlogits.transpose() * k.hidden_act;
  fc2_b_.grad.row(0) += dlogits.colwise().sum();
  Mat dh = dlogits * fc2_w_.value;
  if (k.dropout_mask.size() > 0) dh = dh.cwiseProduct(k.dropout_mask);
  dh = (k.hidden_pre.array() > 0.0).select(dh, 0.0);
  dh = head_bn_.backward(dh);
  fc1_w_.grad.noalias() += dh.transpose() * k.x;
  fc1_b_.grad.row(0) += dh.colwise().sum();
  Mat dx = dh * fc1_w_.value;
  Mat dvisual = dx.leftCols(vdim);

  if (c.use_context) {
    const Eigen::Index proj = c.proj_dim;
    Eigen::Map<const Vec> a1(att_.value.data(), proj);
    Eigen::Map<const Vec> a2(att_.value.data() + proj, proj);
    Mat dctx = dx.rightCols(proj);
    Mat dkeys = Mat::Zero(total, proj);
    Vec ds = Vec::Zero(total), dt = Vec::Zero(total);
    const double slope = c.leaky_slope;
    for (Eigen::Index i = 0; i < total; ++i) {
      const auto& rows = k.nb[i];
      if (rows.empty()) continue;
      const auto& alpha = k.alpha[i];
      std::vector<double> dalpha(rows.size());
      double weighted = 0.0;
      for (std::size_t j = 0; j < rows.size(); ++j) {
        dalpha[j] = dctx.row(i).dot(k.keys.row(rows[j]));
        dkeys.row(rows[j]) += alpha[j] * dctx.row(i);
        weighted += alpha[j] * dalpha[j];
      }
      for (std::size_t j = 0; j < rows.size(); ++j) {
        double de = alpha[j] * (dalpha[j] - weighted);
        double du = de * (k.u[i][j] > 0.0 ? 1.0 : slope);
        ds[i] += du;
        dt[rows[j]] += du;
      }
    }
    Eigen::Map<Vec> da1(att_.grad.data(), proj);
    Eigen::Map<Vec> da2(att_.grad.data() + proj, proj);
    da2 += k.keys.transpose() * dt;
    dkeys += dt * a2.transpose();
    Vec dw1a = k.visual.transpose() * ds;
    w1_.grad.noalias() += a1 * dw1a.transpose();
    da1 += w1_.value * dw1a;
    dvisual += ds * k.w1a.transpose();
    w2_.grad.noalias() += dkeys.transpose() * k.visual;
    dvisual.noalias() += dkeys * w2_.value;
  }

  if (c.use_positional) {
    Mat dpos = dvisual.middleCols(roi_dim, c.pos_dim);
    dpos = (k.pos_pre.array() > 0.0).select(dpos, 0.0);
    dpos = pos_bn_.backward(dpos);
    pos_w_.grad.noalias() += dpos.transpose() * k.positional_in;
    pos_b_.grad.row(0) += dpos.colwise().sum();
  }
  return dvisual.leftCols(roi_dim);
}

ForwardOutput CovaModel::forward_page_full(const Webpage& page, const ContextGraph& graph, const Image& screenshot) {
  FeatureMap fmap = backbone_.forward(screenshot, false);
  Mat pooled = pool_page(page, fmap);
  return forward({PageInputs{&page, &graph, &pooled}}, false);
}

Mat CovaModel::forward_page(const Webpage& page, const ContextGraph& graph, const Image& screenshot) {
  return forward_page_full(page, graph, screenshot).logits;
}

Vec CovaModel::classify(const VisualRepr& v, const ContextRepr& ctx) {
  const int vdim = config_.visual_dim();
  if (v.vec.size() != vdim) throw ShapeError("visual representation has the wrong size");
  Mat x = Mat::Zero(1, vdim + config_.proj_dim);
  x.leftCols(vdim) = v.vec.transpose();
  if (config_.use_context && ctx.vec.size() > 0) {
    if (ctx.vec.size() != config_.proj_dim) throw ShapeError("context representation has the wrong size");
    x.rightCols(config_.proj_dim) = ctx.vec.transpose();
  }
  Mat h = x * fc1_w_.value.transpose();
  h.rowwise() += fc1_b_.value.row(0);
  h = head_bn_.forward(h, false).cwiseMax(0.0);
  Mat logits = h * fc2_w_.value.transpose();
  logits.rowwise() += fc2_b_.value.row(0);
  return logits.row(0).transpose();
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'V', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw SchemaError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, CovaModel& model, const json& meta) {
  std::vector<std::pair<std::string, const Mat*>> arrays;
  for (auto& p : model.params()) arrays.emplace_back(p.name, &p.param->value);
  for (auto& b : model.buffers()) arrays.emplace_back(b.name, b.buffer);

  json header;
  header["model"] = to_json(model.config());
  header["meta"] = meta.is_null() ? json::object() : meta;
  json manifest = json::array();
  for (const auto& [name, m] : arrays) manifest.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
  header["arrays"] = manifest;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : arrays) {
    out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw SchemaError(path.string() + ": not a checkpoint");
  if (get<std::uint32_t>(in) != kCheckpointVersion) throw SchemaError(path.string() + ": unsupported checkpoint version");
  auto len = get<std::uint64_t>(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw SchemaError("checkpoint truncated");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint header: ") + e.what());
  }
  LoadedCheckpoint loaded;
  loaded.model = std::make_unique<CovaModel>(model_config_from_json(header.at("model")), 0);
  loaded.meta = header.value("meta", json::object());

  std::map<std::string, Mat*> targets;
  for (auto& p : loaded.model->params()) targets[p.name] = &p.param->value;
  for (auto& b : loaded.model->buffers()) targets[b.name] = b.buffer;
  const auto& manifest = header.at("arrays");
  if (manifest.size() != targets.size()) throw SchemaError("checkpoint array count does not match the architecture");
  for (const auto& entry : manifest) {
    auto name = entry.at("name").get<std::string>();
    auto it = targets.find(name);
    if (it == targets.end()) throw SchemaError("checkpoint has unexpected array " + name);
    Mat& m = *it->second;
    if (entry.at("rows").get<Eigen::Index>() != m.rows() || entry.at("cols").get<Eigen::Index>() != m.cols()) {
      throw SchemaError("checkpoint array " + name + " has the wrong shape");
    }
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw SchemaError("checkpoint truncated");
  }
  return loaded;
}

}  // namespace cova
