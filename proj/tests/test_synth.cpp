#include "doctest.h"

#include <cstdlib>
#include <fstream>

#include "cova/dataset.hpp"
#include "cova/error.hpp"
#include "cova/synth.hpp"
#include "helpers.hpp"

using namespace cova;
using cova::testing::TempDir;

namespace {

SynthSpec spec_of(int pages, int domains, int elements) {
  SynthSpec s;
  s.n_pages = pages;
  s.n_domains = domains;
  s.elements_per_page = elements;
  s.seed = 17;
  return s;
}

int pre(const Webpage& w, int id) { return w.elements[static_cast<std::size_t>(w.index_of(id))].preorder_index; }

}  // namespace

TEST_CASE("generated pages ingest cleanly with exact element counts") {
  for (int n_decoy : {0, 1, 3}) {
    SynthSpec spec = spec_of(8, 4, 70);
    spec.n_decoy_prices = n_decoy;
    for (int i = 0; i < spec.n_pages; ++i) {
      SynthPage sp = generate_page(spec, i, false);
      DomDump dom = parse_dom_dump(serialize_dom_dump(sp.dom));
      auto leaves = attach_labels(extract_leaves(dom), sp.labels);
      CHECK(leaves.size() == 70);
      int counts[kNumClasses] = {};
      for (const auto& e : leaves) ++counts[static_cast<int>(e.label)];
      CHECK(counts[0] == 1);
      CHECK(counts[1] == 1);
      CHECK(counts[2] == 1);
      CHECK(sp.decoy_ids.size() == static_cast<std::size_t>(n_decoy));
      CHECK(sp.domain == synth_domain(i % 4));
      CHECK(sp.page_id == synth_page_id(i));
    }
  }
}

TEST_CASE("decoys look exactly like the price") {
  SynthSpec spec = spec_of(6, 3, 60);
  spec.n_decoy_prices = 2;
  for (int i = 0; i < spec.n_pages; ++i) {
    SynthPage sp = generate_page(spec, i);
    const auto& price = sp.dom.node(*sp.labels.price_id);
    for (int d : sp.decoy_ids) {
      const auto& decoy = sp.dom.node(d);
      CHECK(decoy.text == price.text);
      CHECK(decoy.tag == price.tag);
      CHECK(decoy.bbox.w == price.bbox.w);
      CHECK(decoy.bbox.h == price.bbox.h);
      CHECK(sp.screenshot.crop_equals(int(price.bbox.x), int(price.bbox.y), int(price.bbox.w), int(price.bbox.h),
                                      sp.screenshot, int(decoy.bbox.x), int(decoy.bbox.y)));
    }
  }
}

TEST_CASE("preorder distances: price near title and image, decoys beyond k_default") {
  SynthSpec spec = spec_of(40, 10, 90);
  for (int i = 0; i < spec.n_pages; ++i) {
    SynthPage sp = generate_page(spec, i, false);
    Webpage w = to_webpage(sp);
    const int p = pre(w, *sp.labels.price_id), t = pre(w, *sp.labels.title_id), im = pre(w, *sp.labels.image_id);
    CHECK(std::abs(p - t) <= 3);
    CHECK(std::abs(p - im) <= 3);
    for (int d : sp.decoy_ids) {
      CHECK(std::abs(pre(w, d) - t) > spec.k_default);
      CHECK(std::abs(pre(w, d) - im) > spec.k_default);
    }
  }
}

TEST_CASE("position alone cannot tell price from decoy") {
  // 20 pages per template; the best fixed-slot rule per template is right exactly half the time.
  SynthSpec spec = spec_of(80, 4, 60);
  std::map<int, std::map<std::pair<double, double>, int>> price_at;
  std::map<int, std::set<std::pair<double, double>>> slots;
  for (int i = 0; i < spec.n_pages; ++i) {
    SynthPage sp = generate_page(spec, i, false);
    const auto& pb = sp.dom.node(*sp.labels.price_id).bbox;
    const auto& db = sp.dom.node(sp.decoy_ids.at(0)).bbox;
    ++price_at[sp.template_id][{pb.x, pb.y}];
    slots[sp.template_id].insert({pb.x, pb.y});
    slots[sp.template_id].insert({db.x, db.y});
  }
  int best = 0;
  for (const auto& [t, hist] : price_at) {
    CHECK(slots[t].size() == 2);
    int m = 0;
    for (const auto& [pos, n] : hist) m = std::max(m, n);
    best += m;
  }
  CHECK(static_cast<double>(best) / spec.n_pages == doctest::Approx(0.5));
}

TEST_CASE("generation is deterministic") {
  SynthSpec spec = spec_of(4, 2, 60);
  for (int i = 0; i < 4; ++i) {
    SynthPage a = generate_page(spec, i), b = generate_page(spec, i);
    CHECK(serialize_dom_dump(a.dom) == serialize_dom_dump(b.dom));
    CHECK(a.screenshot == b.screenshot);
  }
  SynthSpec other = spec;
  other.seed = 18;
  CHECK(serialize_dom_dump(generate_page(spec, 0, false).dom) != serialize_dom_dump(generate_page(other, 0, false).dom));
}

TEST_CASE("bad specs") {
  CHECK_THROWS_AS(generate_page(spec_of(4, 2, 20), 0, false), SpecError);
  CHECK_THROWS_AS(generate_page(spec_of(4, 2, 100000), 0, false), SpecError);
  CHECK_THROWS_AS(generate_page(spec_of(4, 2, 60), 4, false), SpecError);
  CHECK_THROWS_AS(generate_page(spec_of(0, 2, 60), 0, false), SpecError);
  SynthSpec many = spec_of(4, 2, 90);
  many.n_decoy_prices = 40;
  CHECK_THROWS_AS(generate_page(many, 0, false), SpecError);
}

TEST_CASE("written dataset loads back") {
  TempDir dir("synth");
  SynthSpec spec = spec_of(3, 3, 60);
  generate(spec, dir.path);
  Dataset ds = load_dataset(dir.path / "manifest.csv");
  REQUIRE(ds.pages.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const Webpage& w = ds.pages[i];
    CHECK(w.fully_labeled);
    CHECK(w.size() == 60);
    Image img = load_screenshot(w);
    CHECK(img == generate_page(spec, static_cast<int>(i)).screenshot);
    CHECK(std::filesystem::exists(dir.path / "leaves" / (w.page_id + ".json")));
  }
}
