// cova: command-line entry point.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cova/config.hpp"
#include "cova/dataset.hpp"
#include "cova/error.hpp"
#include "cova/eval.hpp"
#include "cova/features.hpp"
#include "cova/graph.hpp"
#include "cova/model.hpp"
#include "cova/synth.hpp"
#include "cova/train.hpp"
#include "cova/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cova;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string workdir = ".";
  std::vector<std::string> overrides;
  std::vector<std::string> argv;
};

fs::path resolve(const Globals& g, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.workdir) / path;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// Config file first, then --set overrides, then --seed.
KvConfig merged_kv(const Globals& g) {
  KvConfig kv;
  if (!g.config.empty()) kv = load_kv(resolve(g, g.config));
  for (const auto& o : g.overrides) {
    auto one = parse_kv(o);
    for (auto& [k, v] : one) kv[k] = v;
  }
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  return kv;
}

void write_stamp(const fs::path& dir, const Globals& g, const std::string& command, const KvConfig& config,
                 const std::string& data_hash) {
  json stamp;
  stamp["command"] = command;
  stamp["argv"] = g.argv;
  stamp["seed"] = config.contains("seed") ? config.at("seed") : "0";
  stamp["config"] = config;
  stamp["dataset_hash"] = data_hash;
  write_text(dir / "stamp.json", stamp.dump(2) + "\n");
}

std::optional<fs::path> opt_path(const Globals& g, const std::string& p) {
  if (p.empty()) return std::nullopt;
  return resolve(g, p);
}

// ---- subcommands ----

struct IngestArgs {
  std::string manifest, labels, out;
};

void run_ingest(const Globals& g, const IngestArgs& a) {
  const fs::path out = resolve(g, a.out);
  Dataset ds = load_dataset(resolve(g, a.manifest), opt_path(g, a.labels));
  TagVocabulary vocab = TagVocabulary::from_pages(ds.all());
  write_text(out / "feature_manifest.json", feature_manifest_json(vocab) + "\n");
  int labeled = 0;
  for (const auto& page : ds.pages) {
    json leaves = json::array();
    for (const auto& e : page.elements) {
      leaves.push_back({{"element_id", e.element_id},
                        {"preorder_index", e.preorder_index},
                        {"tag", e.tag},
                        {"bbox", {e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h}},
                        {"label", label_name(e.label)}});
    }
    write_text(out / "elements" / (page.page_id + ".json"), json{{"page_id", page.page_id}, {"leaves", leaves}}.dump() + "\n");
    write_text(out / "features" / (page.page_id + ".csv"), feature_matrix_csv(page, vocab));
    labeled += page.fully_labeled ? 1 : 0;
  }
  write_stamp(out, g, "ingest", merged_kv(g), dataset_hash(resolve(g, a.manifest), opt_path(g, a.labels)));
  std::cout << "ingested " << ds.pages.size() << " pages (" << labeled << " fully labeled) into " << out.string() << "\n";
}

struct SynthArgs {
  std::string spec, out;
};

void run_synth(const Globals& g, const SynthArgs& a) {
  KvConfig kv = a.spec.empty() ? KvConfig{} : load_kv(resolve(g, a.spec));
  for (auto& [k, v] : merged_kv(g)) kv[k] = v;
  SynthSpec spec = apply_synth_spec(kv);
  const fs::path out = resolve(g, a.out);
  generate(spec, out);
  write_stamp(out, g, "synth", to_kv(spec), dataset_hash(out / "manifest.csv"));
  std::cout << "wrote " << spec.n_pages << " pages over " << spec.n_domains << " templates to " << out.string() << "\n";
}

struct GraphArgs {
  std::string data, labels, out, metric = "preorder";
  int k = 24;
};

void run_build_graph(const Globals& g, const GraphArgs& a) {
  Dataset ds = load_dataset(resolve(g, a.data), opt_path(g, a.labels));
  const DistanceMetric metric = metric_from_name(a.metric);
  const fs::path out = resolve(g, a.out);
  for (const auto& page : ds.pages) {
    ContextGraph graph = build_graph(page.elements, a.k, metric, page.dom.get());
    graph.page_id = page.page_id;
    write_text(out / (page.page_id + ".json"), graph_to_json(graph) + "\n");
  }
  KvConfig echo = merged_kv(g);
  echo["k"] = std::to_string(a.k);
  echo["metric"] = a.metric;
  write_stamp(out, g, "build-graph", echo, dataset_hash(resolve(g, a.data), opt_path(g, a.labels)));
  std::cout << "built " << ds.pages.size() << " graphs (k=" << a.k << ")\n";
}

struct TrainArgs {
  std::string data, labels, out, folds;
  int fold = 0;
  bool all_folds = false;
  int n_folds = 5;
  bool quiet = false;
};

void run_train(const Globals& g, const TrainArgs& a) {
  KvConfig kv = merged_kv(g);
  TrainConfig cfg = apply_train_config(kv);
  const fs::path manifest = resolve(g, a.data);
  Dataset ds = load_dataset(manifest, opt_path(g, a.labels));
  const std::string hash = dataset_hash(manifest, opt_path(g, a.labels));
  const fs::path out = resolve(g, a.out);
  fs::create_directories(out);

  std::vector<FoldSplit> folds = a.folds.empty() ? make_folds(ds.all(), a.n_folds, cfg.seed)
                                                 : folds_from_json(json::parse(std::ifstream(resolve(g, a.folds))));
  write_text(out / "folds.json", folds_to_json(folds).dump(2) + "\n");
  std::vector<int> which;
  if (a.all_folds) {
    for (const auto& f : folds) which.push_back(f.fold_id);
  } else {
    which.push_back(a.fold);
  }

  std::ofstream log(out / "train_log.jsonl", std::ios::trunc);
  for (int f : which) {
    auto it = std::find_if(folds.begin(), folds.end(), [f](const FoldSplit& s) { return s.fold_id == f; });
    if (it == folds.end()) throw ConfigError("no fold " + std::to_string(f));
    auto train_pages = ds.by_domains(it->train_domains);
    auto val_pages = ds.by_domains(it->val_domains);
    TrainOptions opt;
    opt.on_epoch = [&](const EpochReport& r) {
      json line = to_json(r);
      line["fold"] = f;
      log << line.dump() << "\n";
      log.flush();
      if (!a.quiet) {
        std::fprintf(stderr, "fold %d epoch %d loss %.4f val %.3f/%.3f/%.3f (%.1fs)\n", f, r.epoch, r.train_loss, r.val[0],
                     r.val[1], r.val[2], r.wall_time);
      }
    };
    TrainResult res = train(train_pages, val_pages, cfg, opt);
    json meta;
    meta["fold"] = f;
    meta["best_epoch"] = res.best_epoch;
    meta["stopped_early"] = res.stopped_early;
    meta["train_config"] = to_kv(cfg);
    meta["dataset_hash"] = hash;
    meta["test_domains"] = it->test_domains;
    save_checkpoint(out / ("fold" + std::to_string(f) + ".ckpt"), *res.model, meta);
    std::cout << "fold " << f << ": best epoch " << res.best_epoch << " of " << res.reports.size() << "\n";
  }
  write_stamp(out, g, "train", to_kv(cfg), hash);
}

// k and metric the checkpoint was trained with.
std::pair<int, DistanceMetric> graph_settings(const LoadedCheckpoint& ck) {
  const auto& tc = ck.meta.at("train_config");
  return {std::stoi(tc.at("k").get<std::string>()), metric_from_name(tc.at("metric").get<std::string>())};
}

json scores_json(const ClassScores& s) { return {{"price", s[0]}, {"title", s[1]}, {"image", s[2]}, {"mean", mean_score(s)}}; }

struct EvalArgs {
  std::string ckpt, data, labels, folds, out = "eval_report.json";
  int topk = 3;
};

void run_eval(const Globals& g, const EvalArgs& a) {
  const fs::path manifest = resolve(g, a.data);
  Dataset ds = load_dataset(manifest, opt_path(g, a.labels));
  const fs::path ckpt = resolve(g, a.ckpt);
  std::vector<FoldSplit> folds;
  if (!a.folds.empty()) {
    folds = folds_from_json(json::parse(std::ifstream(resolve(g, a.folds))));
  } else if (fs::is_directory(ckpt) && fs::exists(ckpt / "folds.json")) {
    folds = folds_from_json(json::parse(std::ifstream(ckpt / "folds.json")));
  } else {
    throw ConfigError("eval needs --folds (or a checkpoint directory with folds.json)");
  }

  json report;
  json per_fold = json::array();
  std::vector<ClassScores> top1, topk;
  for (const auto& f : folds) {
    fs::path file = fs::is_directory(ckpt) ? ckpt / ("fold" + std::to_string(f.fold_id) + ".ckpt") : ckpt;
    if (!fs::exists(file)) continue;
    LoadedCheckpoint ck = load_checkpoint(file);
    if (!fs::is_directory(ckpt) && ck.meta.value("fold", f.fold_id) != f.fold_id) continue;
    auto [k, metric] = graph_settings(ck);
    auto pages = ds.by_domains(f.test_domains);
    if (pages.empty()) continue;
    auto preds = predict_pages(*ck.model, pages, k, metric);
    auto truth = truth_from_pages(pages);
    top1.push_back(cross_domain_accuracy(preds, truth));
    topk.push_back(topk_accuracy(preds, truth, a.topk));
    per_fold.push_back({{"fold", f.fold_id},
                        {"pages", pages.size()},
                        {"accuracy", scores_json(top1.back())},
                        {"top" + std::to_string(a.topk), scores_json(topk.back())}});
  }
  if (top1.empty()) throw ConfigError("no checkpoint matched any fold");
  auto s1 = summarize(top1), sk = summarize(topk);
  report["folds"] = per_fold;
  report["accuracy"] = {{"mean", scores_json(s1.mean)}, {"std", scores_json(s1.stddev)}};
  report["top" + std::to_string(a.topk)] = {{"mean", scores_json(sk.mean)}, {"std", scores_json(sk.stddev)}};
  const fs::path out = resolve(g, a.out);
  write_text(out, report.dump(2) + "\n");
  write_stamp(out.parent_path().empty() ? fs::path(".") : out.parent_path(), g, "eval", merged_kv(g),
              dataset_hash(manifest, opt_path(g, a.labels)));
  std::printf("%-8s %6s %6s %6s\n", "", "price", "title", "image");
  std::printf("%-8s %6.1f %6.1f %6.1f\n", "mean", 100 * s1.mean[0], 100 * s1.mean[1], 100 * s1.mean[2]);
  std::printf("%-8s %6.1f %6.1f %6.1f\n", "std", 100 * s1.stddev[0], 100 * s1.stddev[1], 100 * s1.stddev[2]);
}

struct PredictArgs {
  std::string ckpt, data, labels, page, out = "predictions.jsonl";
};

void run_predict(const Globals& g, const PredictArgs& a) {
  const fs::path manifest = resolve(g, a.data);
  Dataset ds = load_dataset(manifest, opt_path(g, a.labels));
  LoadedCheckpoint ck = load_checkpoint(resolve(g, a.ckpt));
  auto [k, metric] = graph_settings(ck);
  std::vector<const Webpage*> pages;
  for (const auto& p : ds.pages) {
    if (a.page.empty() || p.page_id == a.page) pages.push_back(&p);
  }
  if (pages.empty()) throw UnknownElementError("no page `" + a.page + "` in the dataset");
  auto preds = predict_pages(*ck.model, pages, k, metric);
  std::string lines;
  for (const auto& p : preds) {
    lines += json{{"page_id", p.page_id}, {"price", p.price_id}, {"title", p.title_id}, {"image", p.image_id}}.dump() + "\n";
  }
  const fs::path out = resolve(g, a.out);
  write_text(out, lines);
  write_stamp(out.parent_path().empty() ? fs::path(".") : out.parent_path(), g, "predict", merged_kv(g),
              dataset_hash(manifest, opt_path(g, a.labels)));
  std::cout << lines;
}

struct VizArgs {
  std::string ckpt, data, labels, page, out = "viz";
  int element = -1;
  double threshold = 0.05;
};

void run_viz(const Globals& g, const VizArgs& a) {
  const fs::path manifest = resolve(g, a.data);
  Dataset ds = load_dataset(manifest, opt_path(g, a.labels));
  LoadedCheckpoint ck = load_checkpoint(resolve(g, a.ckpt));
  auto [k, metric] = graph_settings(ck);
  const Webpage* page = nullptr;
  for (const auto& p : ds.pages) {
    if (p.page_id == a.page) page = &p;
  }
  if (!page) throw UnknownElementError("no page `" + a.page + "` in the dataset");
  const int row = page->index_of(a.element);
  if (row < 0) throw UnknownElementError("element " + std::to_string(a.element) + " is not on page " + a.page);
  ContextGraph graph = build_graph(page->elements, k, metric, page->dom.get());
  Image shot = load_screenshot(*page);
  ForwardOutput fo = ck.model->forward_page_full(*page, graph, shot);
  std::map<int, double> attn;
  const auto& nb = fo.neighbor_rows[static_cast<std::size_t>(row)];
  for (std::size_t j = 0; j < nb.size(); ++j) attn[page->elements[static_cast<std::size_t>(nb[j])].element_id] = fo.attention[row][j];
  AttentionViz viz = render_attention(*page, shot, a.element, attn, a.threshold);
  const fs::path out = resolve(g, a.out);
  fs::create_directories(out);
  const std::string stem = page->page_id + "_" + std::to_string(a.element);
  write_png(out / (stem + ".png"), viz.image);
  write_text(out / (stem + ".json"), viz.report.dump(2) + "\n");
  write_stamp(out, g, "viz", merged_kv(g), dataset_hash(manifest, opt_path(g, a.labels)));
  std::cout << "wrote " << (out / (stem + ".png")).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cova: context-aware web element extraction"};
  app.require_subcommand(1);
  Globals g;
  for (int i = 0; i < argc; ++i) g.argv.emplace_back(argv[i]);
  app.add_option("--seed", g.seed, "Random seed (overrides the config file)");
  app.add_option("--config", g.config, "Flat key = value config file");
  app.add_option("--workdir", g.workdir, "Base directory for relative paths");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate DOM dumps and export leaves and features");
  c_ingest->add_option("--manifest", ingest.manifest, "Dataset manifest CSV")->required();
  c_ingest->add_option("--labels", ingest.labels, "Label manifest CSV");
  c_ingest->add_option("--out", ingest.out, "Output directory")->required();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  c_synth->add_option("--spec", synth.spec, "Synthetic spec file (key = value)");
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  GraphArgs graph;
  auto* c_graph = app.add_subcommand("build-graph", "Write the K-nearest context graph of every page");
  c_graph->add_option("--data", graph.data, "Dataset manifest CSV")->required();
  c_graph->add_option("--labels", graph.labels, "Label manifest CSV");
  c_graph->add_option("--k", graph.k, "Neighbours per element")->check(CLI::NonNegativeNumber);
  c_graph->add_option("--metric", graph.metric, "preorder or tree");
  c_graph->add_option("--out", graph.out, "Output directory")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train on one or all cross-validation folds");
  c_train->add_option("--data", tr.data, "Dataset manifest CSV")->required();
  c_train->add_option("--labels", tr.labels, "Label manifest CSV");
  c_train->add_option("--out", tr.out, "Checkpoint directory")->required();
  c_train->add_option("--folds", tr.folds, "Fold JSON (default: made from the dataset)");
  c_train->add_option("--n-folds", tr.n_folds, "Number of folds when making them");
  c_train->add_option("--fold", tr.fold, "Fold to train");
  c_train->add_flag("--all-folds", tr.all_folds, "Train every fold");
  c_train->add_flag("--quiet", tr.quiet, "No per-epoch progress");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Cross-domain accuracy on the test domains of each fold");
  c_eval->add_option("--ckpt", ev.ckpt, "Checkpoint file or directory of fold<f>.ckpt")->required();
  c_eval->add_option("--data", ev.data, "Dataset manifest CSV")->required();
  c_eval->add_option("--labels", ev.labels, "Label manifest CSV");
  c_eval->add_option("--folds", ev.folds, "Fold JSON");
  c_eval->add_option("--topk", ev.topk, "k for top-k accuracy");
  c_eval->add_option("--out", ev.out, "Report JSON path");

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "Price/title/image element per page");
  c_pred->add_option("--ckpt", pr.ckpt, "Checkpoint file")->required();
  c_pred->add_option("--data", pr.data, "Dataset manifest CSV")->required();
  c_pred->add_option("--labels", pr.labels, "Label manifest CSV");
  c_pred->add_option("--page", pr.page, "Only this page id");
  c_pred->add_option("--out", pr.out, "JSON-lines output");

  VizArgs vz;
  auto* c_viz = app.add_subcommand("viz", "Render attention weights of one element");
  c_viz->add_option("--ckpt", vz.ckpt, "Checkpoint file")->required();
  c_viz->add_option("--data", vz.data, "Dataset manifest CSV")->required();
  c_viz->add_option("--labels", vz.labels, "Label manifest CSV");
  c_viz->add_option("--page", vz.page, "Page id")->required();
  c_viz->add_option("--element", vz.element, "Element id")->required();
  c_viz->add_option("--threshold", vz.threshold, "Shading threshold");
  c_viz->add_option("--out", vz.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_ingest->parsed()) run_ingest(g, ingest);
    if (c_synth->parsed()) run_synth(g, synth);
    if (c_graph->parsed()) run_build_graph(g, graph);
    if (c_train->parsed()) run_train(g, tr);
    if (c_eval->parsed()) run_eval(g, ev);
    if (c_pred->parsed()) run_predict(g, pr);
    if (c_viz->parsed()) run_viz(g, vz);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
