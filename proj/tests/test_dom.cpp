#include "doctest.h"

#include <fstream>
#include <functional>

#include "cova/dom.hpp"
#include "cova/error.hpp"
#include "cova/synth.hpp"
#include "helpers.hpp"

#include "json.hpp"

using namespace cova;
using cova::testing::TempDir;

namespace {

std::string one_node() {
  return R"({"version":"1","viewport":[1280,1280],"nodes":[{"id":0,"tag":"BODY","bbox":[0,0,1280,1280],"text":null,"font_size":null,"children":[]}],"root":0})";
}

// BODY(0) -> DIV(1) -> [H1(2), SPAN(3)], DIV(4) -> [IMG(5), P(6)]
std::string seven_nodes() {
  return R"({"version":"1","viewport":[1280,1280],"root":0,"nodes":[
    {"id":0,"tag":"BODY","bbox":[0,0,1280,1280],"text":null,"font_size":null,"children":[1,4]},
    {"id":1,"tag":"DIV","bbox":[0,0,600,400],"text":null,"font_size":null,"children":[2,3]},
    {"id":2,"tag":"H1","bbox":[10,10,300,40],"text":"Lamp","font_size":24,"children":[]},
    {"id":3,"tag":"SPAN","bbox":[10,60,80,20],"text":"$ 12.99","font_size":16,"children":[]},
    {"id":4,"tag":"DIV","bbox":[600,0,600,400],"text":null,"font_size":null,"children":[5,6]},
    {"id":5,"tag":"IMG","bbox":[610,10,200,200],"text":null,"font_size":null,"children":[]},
    {"id":6,"tag":"P","bbox":[610,220,300,20],"text":"Free shipping","font_size":12,"children":[]}]})";
}

struct RandomTree {
  std::vector<DomNode> nodes;
  int root;
};

// Random tree with shuffled ids; some nodes zero-area, off-screen or blocklisted.
RandomTree random_tree(Rng& rng, int n) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[i] = i * 7 + 3;
  rng.shuffle(ids);
  const char* tags[] = {"DIV", "SPAN", "IMG", "P", "SCRIPT", "A", "STYLE"};
  std::vector<DomNode> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    DomNode& d = nodes[i];
    d.id = ids[i];
    d.tag = i == 0 ? "BODY" : tags[rng.uniform_int(0, 6)];
    d.bbox = {rng.uniform(-100, 1200), rng.uniform(-100, 1200), rng.uniform(0, 400), rng.uniform(0, 400)};
    if (rng.bernoulli(0.1)) d.bbox.w = 0;
    if (rng.bernoulli(0.1)) d.bbox.x = 1280 + rng.uniform(0, 50);
    if (i == 0) d.bbox = {0, 0, 1280, 1280};
    if (rng.bernoulli(0.3)) d.text = "t" + std::to_string(i);
    if (i > 0) nodes[static_cast<std::size_t>(rng.uniform_int(0, i - 1))].children.push_back(ids[i]);
  }
  rng.shuffle(nodes);  // storage order is not tree order
  return {nodes, ids[0]};
}

// Independent recursive count of leaves that survive pruning.
int oracle_leaf_count(const DomDump& dom, const PruneConfig& prune) {
  auto ok = [&](const DomNode& n) {
    if (prune.tag_blocklist.contains(n.tag)) return false;
    if (n.bbox.w * n.bbox.h <= 0) return false;
    return !(n.bbox.x >= 1280 || n.bbox.y >= 1280 || n.bbox.x + n.bbox.w <= 0 || n.bbox.y + n.bbox.h <= 0);
  };
  std::function<int(int)> count = [&](int id) {
    int total = 0;
    for (int c : dom.node(id).children) {
      if (ok(dom.node(c))) total += count(c);
    }
    return total == 0 ? 1 : total;
  };
  return ok(dom.node(dom.root())) ? count(dom.root()) : 0;
}

}  // namespace

TEST_CASE("single node dump is one leaf") {
  DomDump dom = parse_dom_dump(one_node());
  CHECK(dom.nodes().size() == 1);
  auto leaves = extract_leaves(dom);
  REQUIRE(leaves.size() == 1);
  CHECK(leaves[0].element_id == 0);
  CHECK(leaves[0].preorder_index == 0);
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(parse_dom_dump("{not json"), SchemaError);
  CHECK_THROWS_AS(parse_dom_dump(R"([1,2])"), SchemaError);
  auto j = nlohmann::json::parse(one_node());
  SUBCASE("version") {
    j["version"] = "2";
    CHECK_THROWS_AS(parse_dom_dump(j.dump()), SchemaError);
  }
  SUBCASE("missing field") {
    j["nodes"][0].erase("bbox");
    CHECK_THROWS_AS(parse_dom_dump(j.dump()), SchemaError);
  }
  SUBCASE("bad bbox") {
    j["nodes"][0]["bbox"] = {1, 2, 3};
    CHECK_THROWS_AS(parse_dom_dump(j.dump()), SchemaError);
  }
  SUBCASE("negative extent") {
    j["nodes"][0]["bbox"] = {0, 0, -1, 5};
    CHECK_THROWS_AS(parse_dom_dump(j.dump()), BoundsError);
  }
  SUBCASE("self child") {
    j["nodes"][0]["children"] = {0};
    CHECK_THROWS_AS(parse_dom_dump(j.dump()), CycleError);
  }
  SUBCASE("duplicate ids") {
    j["nodes"].push_back(j["nodes"][0]);
    CHECK_THROWS_AS(parse_dom_dump(j.dump()), SchemaError);
  }
  SUBCASE("unknown child") {
    j["nodes"][0]["children"] = {42};
    CHECK_THROWS_AS(parse_dom_dump(j.dump()), SchemaError);
  }
}

TEST_CASE("two-node cycle") {
  const char* raw = R"({"version":"1","viewport":[1280,1280],"root":0,"nodes":[
    {"id":0,"tag":"BODY","bbox":[0,0,10,10],"text":null,"font_size":null,"children":[1]},
    {"id":1,"tag":"DIV","bbox":[0,0,10,10],"text":null,"font_size":null,"children":[2]},
    {"id":2,"tag":"DIV","bbox":[0,0,10,10],"text":null,"font_size":null,"children":[1]}]})";
  CHECK_THROWS_AS(parse_dom_dump(raw), CycleError);
}

TEST_CASE("seven node dump has four leaves in preorder") {
  DomDump dom = parse_dom_dump(seven_nodes());
  auto leaves = extract_leaves(dom);
  REQUIRE(leaves.size() == 4);
  const int ids[] = {2, 3, 5, 6};
  for (int i = 0; i < 4; ++i) {
    CHECK(leaves[i].element_id == ids[i]);
    CHECK(leaves[i].preorder_index == i);
  }
  CHECK(leaves[1].text == "$ 12.99");
  CHECK(dom.parent(5) == 4);
  CHECK(dom.depth(6) == 2);
}

TEST_CASE("generated page leaves match the generator's manifest") {
  SynthSpec spec;
  spec.n_pages = 3;
  spec.n_domains = 3;
  spec.elements_per_page = 60;
  for (int i = 0; i < 3; ++i) {
    SynthPage sp = generate_page(spec, i, false);
    DomDump reparsed = parse_dom_dump(serialize_dom_dump(sp.dom));
    auto leaves = attach_labels(extract_leaves(reparsed), sp.labels);
    auto manifest = nlohmann::json::parse(leaf_manifest_json(sp));
    REQUIRE(manifest["leaves"].size() == leaves.size());
    CHECK(leaves.size() == 60);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      CHECK(manifest["leaves"][k]["element_id"] == leaves[k].element_id);
      CHECK(manifest["leaves"][k]["preorder_index"] == leaves[k].preorder_index);
      CHECK(manifest["leaves"][k]["label"] == std::string(label_name(leaves[k].label)));
    }
  }
}

TEST_CASE("pruning rules") {
  auto j = nlohmann::json::parse(seven_nodes());
  SUBCASE("zero width leaf is dropped") {
    j["nodes"][3]["bbox"] = {10, 60, 0, 20};
    auto leaves = extract_leaves(parse_dom_dump(j.dump()));
    CHECK(leaves.size() == 3);
    CHECK(leaves[1].element_id == 5);
  }
  SUBCASE("off-screen leaf is dropped") {
    j["nodes"][5]["bbox"] = {1280, 10, 200, 200};
    auto leaves = extract_leaves(parse_dom_dump(j.dump()));
    CHECK(leaves.size() == 3);
    for (const auto& e : leaves) CHECK(e.element_id != 5);
  }
  SUBCASE("blocklisted subtree is dropped") {
    j["nodes"][1]["tag"] = "SCRIPT";
    auto leaves = extract_leaves(parse_dom_dump(j.dump()));
    REQUIRE(leaves.size() == 2);
    CHECK(leaves[0].element_id == 5);
  }
  SUBCASE("internal node whose children are all pruned becomes a leaf") {
    j["nodes"][5]["bbox"] = {610, 10, 0, 0};
    j["nodes"][6]["tag"] = "STYLE";
    auto leaves = extract_leaves(parse_dom_dump(j.dump()));
    REQUIRE(leaves.size() == 3);
    CHECK(leaves[2].element_id == 4);
  }
  SUBCASE("boxes are clipped") {
    j["nodes"][5]["bbox"] = {1200, -20, 200, 100};
    auto leaves = extract_leaves(parse_dom_dump(j.dump()));
    CHECK(leaves[2].bbox == BBox{1200, 0, 80, 80});
  }
  SUBCASE("everything pruned") {
    j["nodes"][0]["bbox"] = {0, 0, 0, 0};
    CHECK_THROWS_AS(extract_leaves(parse_dom_dump(j.dump())), EmptyPageError);
  }
}

TEST_CASE("property: leaf count matches a recursive oracle and preorder is contiguous") {
  Rng rng(11);
  PruneConfig prune;
  for (int t = 0; t < 300; ++t) {
    auto tree = random_tree(rng, 1 + static_cast<int>(rng.uniform_int(0, 60)));
    DomDump dom("1", {}, tree.root, tree.nodes);
    const int expect = oracle_leaf_count(dom, prune);
    std::vector<WebElement> leaves;
    try {
      leaves = extract_leaves(dom, prune);
    } catch (const EmptyPageError&) {
      CHECK(expect == 0);
      continue;
    }
    CHECK(static_cast<int>(leaves.size()) == expect);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      CHECK(leaves[i].preorder_index == static_cast<int>(i));
      CHECK(leaves[i].bbox.x >= 0);
      CHECK(leaves[i].bbox.right() <= 1280);
    }
  }
}

TEST_CASE("property: serialize/parse round trip is byte-stable") {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    auto tree = random_tree(rng, 1 + static_cast<int>(rng.uniform_int(0, 40)));
    DomDump dom("1", {}, tree.root, tree.nodes);
    const std::string once = serialize_dom_dump(dom);
    CHECK(serialize_dom_dump(parse_dom_dump(once)) == once);
  }
}

TEST_CASE("attach_labels") {
  std::vector<WebElement> els(5);
  for (int i = 0; i < 5; ++i) {
    els[i].element_id = i;
    els[i].preorder_index = i;
  }
  auto labeled = attach_labels(els, {"p", 3, 1, 2});
  const Label expect[] = {Label::Background, Label::Title, Label::Image, Label::Price, Label::Background};
  for (int i = 0; i < 5; ++i) CHECK(labeled[i].label == expect[i]);
  CHECK_THROWS_AS(attach_labels(els, {"p", 3, 3, 2}), DuplicateLabelError);
  CHECK_THROWS_AS(attach_labels(els, {"p", 9, 1, 2}), MissingElementError);
  auto none = attach_labels(els, {"p", std::nullopt, std::nullopt, std::nullopt});
  for (const auto& e : none) CHECK(e.label == Label::Background);
}

TEST_CASE("manifests and load_webpage") {
  TempDir dir("dom");
  {
    std::ofstream(dir.path / "a.json") << seven_nodes();
    std::ofstream(dir.path / "b.json") << one_node();
  }
  write_dataset_manifest(dir.path / "manifest.csv", {{"a", "shop.test", "a.png", "a.json"}, {"b", "other.test", "b.png", "b.json"}});
  write_label_manifest(dir.path / "labels.csv", {{"a", 3, 2, 5}, {"b", std::nullopt, std::nullopt, std::nullopt}});
  auto entries = read_dataset_manifest(dir.path / "manifest.csv");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].dom_path == dir.path / "a.json");
  auto labels = read_label_manifest(dir.path / "labels.csv");
  Webpage a = load_webpage(entries[0], &labels.at("a"));
  CHECK(a.fully_labeled);
  CHECK(a.labeled(Label::Price) == 3);
  CHECK(a.labeled(Label::Image) == 5);
  int counts[kNumClasses] = {};
  for (const auto& e : a.elements) ++counts[static_cast<int>(e.label)];
  CHECK(counts[0] == 1);
  CHECK(counts[1] == 1);
  CHECK(counts[2] == 1);
  CHECK(counts[3] == static_cast<int>(a.size()) - 3);
  Webpage b = load_webpage(entries[1], &labels.at("b"));
  CHECK_FALSE(b.fully_labeled);

  std::ofstream(dir.path / "bad.csv") << "page_id,domain\nx,y\n";
  CHECK_THROWS_AS(read_dataset_manifest(dir.path / "bad.csv"), SchemaError);
  std::ofstream(dir.path / "badlabels.csv") << "page_id,price_id,title_id,image_id\na,x,1,2\n";
  CHECK_THROWS_AS(read_label_manifest(dir.path / "badlabels.csv"), SchemaError);
}

TEST_CASE("clip_to_viewport") {
  CHECK(clip_to_viewport({-10, -10, 30, 30}, 1280, 1280) == BBox{0, 0, 20, 20});
  CHECK(clip_to_viewport({1270.5, 5, 30, 10}, 1280, 1280) == BBox{1270.5, 5, 9.5, 10});
  CHECK(clip_to_viewport({2000, 5, 30, 10}, 1280, 1280).area() == 0.0);
}
