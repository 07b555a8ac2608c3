#include "doctest.h"

#include "cova/error.hpp"
#include "cova/viz.hpp"
#include "helpers.hpp"

using namespace cova;

namespace {

Webpage grid_page() {
  Webpage p;
  p.page_id = "v";
  for (int i = 0; i < 4; ++i) {
    WebElement e;
    e.element_id = 20 + i;
    e.preorder_index = i;
    e.bbox = {10.0 + 30 * i, 10, 20, 20};
    p.elements.push_back(e);
  }
  return p;
}

}  // namespace

TEST_CASE("uniform attention shades every neighbour equally") {
  Webpage page = grid_page();
  Image shot(128, 64);
  auto viz = render_attention(page, shot, 20, {{21, 1.0 / 3}, {22, 1.0 / 3}, {23, 1.0 / 3}});
  const auto& nb = viz.report["neighbors"];
  REQUIRE(nb.size() == 3);
  for (const auto& n : nb) {
    CHECK(n["opacity"].get<double>() == doctest::Approx(0.8 / 3));
    CHECK(n["shaded"].get<bool>());
  }
  CHECK(viz.image.at(45, 20) == viz.image.at(75, 20));
  CHECK(viz.image.at(45, 20) == viz.image.at(105, 20));
  CHECK(viz.report["activated_fraction"] == 1.0);
}

TEST_CASE("full attention gives 0.8 opacity and a red outline") {
  Webpage page = grid_page();
  Image shot(128, 64);
  auto viz = render_attention(page, shot, 20, {{21, 1.0}, {22, 0.0}});
  CHECK(viz.report["neighbors"][0]["opacity"] == doctest::Approx(0.8));
  // white under green at 0.8
  CHECK(viz.image.at(50, 20) == Rgb{51, 187, 51});
  CHECK(viz.image.at(80, 20) == Rgb{255, 255, 255});
  CHECK(viz.image.at(10, 10) == kTargetOutline);
  CHECK(viz.image.at(12, 12) == kTargetOutline);
  CHECK(viz.image.at(20, 20) == Rgb{255, 255, 255});  // interior untouched
  CHECK(viz.report["activated_fraction"] == 0.5);
}

TEST_CASE("threshold keeps faint neighbours unshaded") {
  Webpage page = grid_page();
  auto viz = render_attention(page, Image(128, 64), 21, {{20, 0.04}, {22, 0.96}}, 0.05);
  CHECK_FALSE(viz.report["neighbors"][0]["shaded"].get<bool>());
  CHECK(viz.image.at(20, 20) == Rgb{255, 255, 255});
}

TEST_CASE("report survives a json round trip") {
  Webpage page = grid_page();
  auto viz = render_attention(page, Image(128, 64), 22, {{21, 0.25}, {23, 0.75}});
  auto back = nlohmann::json::parse(viz.report.dump());
  CHECK(back == viz.report);
  CHECK(back["element_id"] == 22);
}

TEST_CASE("unknown elements") {
  Webpage page = grid_page();
  CHECK_THROWS_AS(render_attention(page, Image(128, 64), 99, {}), UnknownElementError);
  CHECK_THROWS_AS(render_attention(page, Image(128, 64), 20, {{99, 1.0}}), UnknownElementError);
}

TEST_CASE("activated fraction") {
  CHECK(activated_fraction({}) == 0.0);
  CHECK(activated_fraction({{{1, 0.5}, {2, 0.5}}, {{3, 0.01}, {4, 0.99}}}) == doctest::Approx(0.75));
}
