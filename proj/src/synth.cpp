#include "cova/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "cova/error.hpp"
#include "cova/rng.hpp"
#include "csv.hpp"

#include "json.hpp"

namespace cova {

void SynthSpec::validate() const {
  if (n_pages < 1) throw SpecError("n_pages must be at least 1");
  if (n_domains < 1) throw SpecError("n_domains must be at least 1");
  if (elements_per_page < 4) throw SpecError("elements_per_page must be at least 4");
  if (n_decoy_prices < 0) throw SpecError("n_decoy_prices must be nonnegative");
  if (k_default < 0) throw SpecError("k_default must be nonnegative");
}

std::string synth_page_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%05d", index);
  return buf;
}

std::string synth_domain(int template_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shop%02d.test", template_id);
  return buf;
}

namespace {

constexpr int kSide = kViewportSide;

int up8(int v) { return (v + 7) / 8 * 8; }

Rgb random_color(Rng& rng, int lo, int hi) {
  return {static_cast<std::uint8_t>(rng.uniform_int(lo, hi)), static_cast<std::uint8_t>(rng.uniform_int(lo, hi)),
          static_cast<std::uint8_t>(rng.uniform_int(lo, hi))};
}

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&words)[N]) {
  return words[rng.uniform_int(0, static_cast<std::int64_t>(N) - 1)];
}

const char* const kAdjectives[] = {"CLASSIC", "DELUXE", "ULTRA", "COMPACT", "SMART", "VINTAGE", "PRO", "NOVA", "SOLAR", "ROYAL"};
const char* const kNouns[] = {"KETTLE", "LAMP", "BACKPACK", "HEADSET", "BLENDER", "JACKET", "WATCH", "SPEAKER", "CHAIR", "CAMERA"};
const char* const kNav[] = {"HOME", "DEALS", "HELP", "CART", "ACCOUNT", "NEW", "SALE", "BRANDS", "GIFTS"};
const char* const kFiller[] = {"FREE SHIPPING", "IN STOCK", "4 STARS", "READ MORE", "RETURNS", "FAQ", "CONTACT US",
                               "TOP RATED", "SIZE GUIDE", "WISHLIST", "SUBSCRIBE", "ABOUT", "STORES", "CAREERS",
                               "PRIVACY", "2 YEAR WARRANTY", "TRACK ORDER", "GIFT CARDS"};
const char* const kAside[] = {"CUSTOMERS ALSO VIEWED", "SPONSORED", "RECENTLY SEEN", "BUNDLE OFFER", "SIMILAR ITEMS"};

struct Template {
  bool stacked = false;
  Rgb page_bg, text, header_bg, block_bg, price_bg, price_fg, footer_bg;
  int nav_count = 3;
  int title_scale = 3;
  int pad = 16;
  int main_side = 192;
  int thumb_side = 64;
  int block_w = 560, block_h = 360;
  int slot_ax = 32, slot_ay = 96, slot_bx = 656, slot_by = 96;
  int cell_w = 152, cell_h = 24;
  int grid_y = 0;
};

Template make_template(const SynthSpec& spec, int t) {
  Rng rng(Rng::derive(spec.seed, 1'000'000 + static_cast<std::uint64_t>(t)));
  Template tp;
  tp.stacked = rng.bernoulli(0.5);
  tp.page_bg = random_color(rng, 215, 255);
  tp.text = random_color(rng, 0, 70);
  tp.header_bg = random_color(rng, 60, 200);
  tp.block_bg = random_color(rng, 225, 255);
  tp.price_bg = random_color(rng, 200, 255);
  tp.price_fg = random_color(rng, 90, 180);
  tp.footer_bg = random_color(rng, 180, 235);
  tp.nav_count = static_cast<int>(rng.uniform_int(3, 7));
  tp.title_scale = static_cast<int>(rng.uniform_int(2, 3));
  tp.pad = 8 * static_cast<int>(rng.uniform_int(1, 3));
  tp.main_side = 8 * static_cast<int>(rng.uniform_int(20, 28));
  tp.thumb_side = 8 * static_cast<int>(rng.uniform_int(6, 9));
  tp.cell_w = 8 * static_cast<int>(rng.uniform_int(16, 22));
  const int price_y = tp.pad + 48;
  tp.block_h = price_y + 40 + tp.main_side + tp.pad;
  const int jitter = 8 * static_cast<int>(rng.uniform_int(0, 3));
  if (tp.stacked) {
    tp.block_w = 1200 - jitter;
    tp.slot_ax = 32 + jitter;
    tp.slot_ay = 96;
    tp.slot_bx = tp.slot_ax;
    tp.slot_by = tp.slot_ay + tp.block_h + 16;
    tp.grid_y = tp.slot_by + tp.block_h + 16;
  } else {
    tp.block_w = 584 - jitter;
    tp.slot_ax = 32 + jitter;
    tp.slot_ay = 96 + jitter;
    tp.slot_bx = tp.slot_ax + tp.block_w + 32;
    tp.slot_by = tp.slot_ay;
    tp.grid_y = tp.slot_ay + tp.block_h + 24;
  }
  return tp;
}

// Balanced placement: per template, half the pages put the product in the first slot.
bool product_first(const SynthSpec& spec, int index) {
  const int t = index % spec.n_domains;
  const int occurrence = index / spec.n_domains;
  const int count = (spec.n_pages - t + spec.n_domains - 1) / spec.n_domains;
  Rng rng(Rng::derive(spec.seed, 2'000'000 + static_cast<std::uint64_t>(t)));
  std::vector<char> seq(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) seq[i] = i < count / 2 ? 1 : 0;
  if (count % 2 == 1) seq[count / 2] = rng.bernoulli(0.5) ? 1 : 0;
  rng.shuffle(seq);
  return seq[static_cast<std::size_t>(occurrence)] != 0;
}

class PageBuilder {
public:
  PageBuilder(bool render, Rgb bg) : render_(render) {
    if (render_) img_ = Image(kSide, kSide, bg);
    nodes_.push_back({0, "BODY", {0, 0, kSide, kSide}, std::nullopt, std::nullopt, {}});
  }

  int add(int parent, std::string tag, BBox box, std::optional<std::string> text = std::nullopt,
          std::optional<double> font = std::nullopt) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({id, std::move(tag), box, std::move(text), font, {}});
    nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
    return id;
  }

  Image& img() { return img_; }
  bool render() const { return render_; }
  std::vector<DomNode> take_nodes() { return std::move(nodes_); }

  void fill(const BBox& b, Rgb c) {
    if (render_) img_.fill_rect(static_cast<int>(b.x), static_cast<int>(b.y), static_cast<int>(b.w), static_cast<int>(b.h), c);
  }
  void text(int x, int y, const std::string& s, int scale, Rgb c) {
    if (render_) font::draw_text(img_, x, y, s, scale, c);
  }

  // Solid frame with a proportional inner mark, so a thumbnail is a scaled copy of the main picture.
  void picture(const BBox& b, Rgb outer, Rgb inner, int shape) {
    if (!render_) return;
    const int x = static_cast<int>(b.x), y = static_cast<int>(b.y), s = static_cast<int>(b.w);
    img_.fill_rect(x, y, s, s, outer);
    if (shape == 0) {
      img_.fill_ellipse(x + s / 4, y + s / 4, s / 2, s / 2, inner);
    } else {
      img_.fill_rect(x + s / 4, y + s / 3, s / 2, s / 3, inner);
    }
  }

private:
  bool render_;
  Image img_;
  std::vector<DomNode> nodes_;
};

// Text box: 8-aligned, text inset by 8px horizontally and 4px * scale vertically.
BBox text_box(int x, int y, const std::string& s, int scale) {
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(up8(font::text_width(s, scale) + 16)),
          static_cast<double>(up8(font::text_height(scale) + 8))};
}

void draw_text_box(PageBuilder& pb, const BBox& b, const std::string& s, int scale, Rgb bg, Rgb fg) {
  pb.fill(b, bg);
  pb.text(static_cast<int>(b.x) + 8, static_cast<int>(b.y) + 4, s, scale, fg);
}

}  // namespace

SynthPage generate_page(const SynthSpec& spec, int index, bool render) {
  spec.validate();
  if (index < 0 || index >= spec.n_pages) throw SpecError("page index out of range");
  const int t = index % spec.n_domains;
  const Template tp = make_template(spec, t);
  Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(index)));

  const int decoy_block_leaves = 2 + spec.n_decoy_prices;
  // Enough filler between the two blocks that decoys stay beyond k_default of the title and pictures.
  const int gap = spec.k_default + 1;
  const int fixed = 1 + tp.nav_count + 5 + decoy_block_leaves + gap;
  const int footer = spec.elements_per_page - fixed;
  if (footer < 0) {
    throw SpecError("elements_per_page=" + std::to_string(spec.elements_per_page) + " is below the " +
                    std::to_string(fixed) + " leaves template " + std::to_string(t) + " needs");
  }
  const int cols = (kSide - 64) / tp.cell_w;
  const int rows = (kSide - 8 - tp.grid_y) / tp.cell_h;
  if (gap + footer > cols * rows) {
    throw SpecError("elements_per_page=" + std::to_string(spec.elements_per_page) + " does not fit the layout");
  }
  const int extra_rows = spec.n_decoy_prices > 1 ? spec.n_decoy_prices - 1 : 0;
  const int price_y = tp.pad + 48;
  if (price_y + 80 + 32 * extra_rows > tp.block_h) throw SpecError("too many decoy prices for the block");

  PageBuilder pb(render, tp.page_bg);
  pb.add(0, "SCRIPT", {0, 0, 0, 0}, "track();");

  // Header.
  const int header = pb.add(0, "HEADER", {0, 0, kSide, 64});
  pb.fill({0, 0, kSide, 64}, tp.header_bg);
  const std::string logo = "SHOP" + std::to_string(t);
  BBox logo_box = text_box(16, 16, logo, 2);
  pb.add(header, "DIV", logo_box, logo, 16.0);
  draw_text_box(pb, logo_box, logo, 2, tp.header_bg, tp.block_bg);
  for (int n = 0; n < tp.nav_count; ++n) {
    std::string word = pick(rng, kNav);
    BBox b = text_box(240 + 136 * n, 24, word, 1);
    pb.add(header, "A", b, word, 8.0);
    draw_text_box(pb, b, word, 1, tp.header_bg, tp.block_bg);
  }

  const int main = pb.add(0, "MAIN", {0, 64, kSide, static_cast<double>(tp.grid_y - 64)});

  const std::string price = "$" + std::to_string(rng.uniform_int(1, 999)) + "." +
                            std::to_string(rng.uniform_int(0, 9)) + std::to_string(rng.uniform_int(0, 9));
  const std::string title = std::string(pick(rng, kAdjectives)) + " " + pick(rng, kNouns) + " " +
                            std::to_string(rng.uniform_int(100, 9999));
  const Rgb pic_outer = random_color(rng, 0, 255), pic_inner = random_color(rng, 0, 255);
  const int pic_shape = static_cast<int>(rng.uniform_int(0, 1));
  const bool first = product_first(spec, index);

  std::optional<int> title_id, price_id, image_id;
  std::vector<int> decoys;

  auto product_block = [&](int x0, int y0) {
    const int block = pb.add(main, "DIV", {double(x0), double(y0), double(tp.block_w), double(tp.block_h)});
    pb.fill({double(x0), double(y0), double(tp.block_w), double(tp.block_h)}, tp.block_bg);
    BBox tb = text_box(x0 + tp.pad, y0 + tp.pad, title, tp.title_scale);
    title_id = pb.add(block, "H1", tb, title, 8.0 * tp.title_scale);
    draw_text_box(pb, tb, title, tp.title_scale, tp.block_bg, tp.text);
    BBox prb = text_box(x0 + tp.pad, y0 + price_y, price, 2);
    price_id = pb.add(block, "SPAN", prb, price, 16.0);
    draw_text_box(pb, prb, price, 2, tp.price_bg, tp.price_fg);
    const int gy = y0 + price_y + 40;
    const int tx = x0 + tp.pad + tp.main_side + 16;
    std::vector<BBox> pics = {
        {double(x0 + tp.pad), double(gy), double(tp.main_side), double(tp.main_side)},
        {double(tx), double(gy), double(tp.thumb_side), double(tp.thumb_side)},
        {double(tx), double(gy + tp.thumb_side + 16), double(tp.thumb_side), double(tp.thumb_side)}};
    std::vector<int> order = {0, 1, 2};
    rng.shuffle(order);
    for (int o : order) {
      const int id = pb.add(block, "IMG", pics[o]);
      pb.picture(pics[o], pic_outer, pic_inner, pic_shape);
      if (o == 0) image_id = id;
    }
  };

  auto decoy_block = [&](int x0, int y0) {
    const int block = pb.add(main, "DIV", {double(x0), double(y0), double(tp.block_w), double(tp.block_h)});
    pb.fill({double(x0), double(y0), double(tp.block_w), double(tp.block_h)}, tp.block_bg);
    std::string head = pick(rng, kAside);
    BBox hb = text_box(x0 + tp.pad, y0 + tp.pad, head, 1);
    pb.add(block, "DIV", hb, head, 8.0);
    draw_text_box(pb, hb, head, 1, tp.block_bg, tp.text);
    for (int d = 0; d < spec.n_decoy_prices; ++d) {
      const int y = d == 0 ? y0 + price_y : y0 + price_y + 48 + 32 * d;
      BBox b = text_box(x0 + tp.pad, y, price, 2);
      decoys.push_back(pb.add(block, "SPAN", b, price, 16.0));
      draw_text_box(pb, b, price, 2, tp.price_bg, tp.price_fg);
      if (d == 0) {
        std::string note = std::string(pick(rng, kAdjectives)) + " " + pick(rng, kNouns);
        BBox nb = text_box(x0 + tp.pad, y0 + price_y + 40 - 8, note, 1);
        pb.add(block, "P", nb, note, 8.0);
        draw_text_box(pb, nb, note, 1, tp.block_bg, tp.text);
      }
    }
    if (spec.n_decoy_prices == 0) {
      std::string note = std::string(pick(rng, kAdjectives)) + " " + pick(rng, kNouns);
      BBox nb = text_box(x0 + tp.pad, y0 + price_y + 32, note, 1);
      pb.add(block, "P", nb, note, 8.0);
      draw_text_box(pb, nb, note, 1, tp.block_bg, tp.text);
    }
  };

  int cell = 0;
  auto filler = [&](int parent) {
    const int col = cell % cols, row = cell / cols;
    ++cell;
    const int x = 32 + col * tp.cell_w, y = tp.grid_y + row * tp.cell_h;
    if (rng.bernoulli(0.15)) {
      BBox b{double(x), double(y), 16, 16};
      pb.add(parent, "IMG", b);
      pb.fill(b, random_color(rng, 0, 255));
    } else {
      std::string word = pick(rng, kFiller);
      BBox b = text_box(x, y, word, 1);
      b.w = std::min(b.w, double(tp.cell_w - 8));
      pb.add(parent, rng.bernoulli(0.5) ? "LI" : "P", b, word, 8.0);
      draw_text_box(pb, b, word, 1, tp.page_bg, tp.text);
    }
  };

  if (first) {
    product_block(tp.slot_ax, tp.slot_ay);
  } else {
    decoy_block(tp.slot_ax, tp.slot_ay);
  }
  const int rows_gap = (gap + cols - 1) / cols;
  const int section = pb.add(main, "SECTION", {0, double(tp.grid_y), kSide, double(rows_gap * tp.cell_h)});
  for (int i = 0; i < gap; ++i) filler(section);
  if (first) {
    decoy_block(tp.slot_bx, tp.slot_by);
  } else {
    product_block(tp.slot_bx, tp.slot_by);
  }
  if (footer > 0) {
    const int foot_y = tp.grid_y + (gap / cols) * tp.cell_h;
    const int foot = pb.add(0, "FOOTER", {0, double(foot_y), kSide, double(kSide - foot_y)});
    for (int i = 0; i < footer; ++i) filler(foot);
  }

  LabelManifest labels{synth_page_id(index), price_id, title_id, image_id};
  Image shot = render ? std::move(pb.img()) : Image{};
  return SynthPage{synth_page_id(index), synth_domain(t), t, first,
                   DomDump(std::string(kDomSchemaVersion), Viewport{}, 0, pb.take_nodes()), std::move(shot),
                   std::move(labels), std::move(decoys)};
}

Webpage to_webpage(const SynthPage& page, const PruneConfig& prune) {
  Webpage w;
  w.page_id = page.page_id;
  w.domain = page.domain;
  w.dom = std::make_shared<const DomDump>(page.dom);
  w.elements = attach_labels(extract_leaves(*w.dom, prune), page.labels);
  w.fully_labeled = page.labels.complete();
  return w;
}

std::string leaf_manifest_json(const SynthPage& page) {
  auto leaves = attach_labels(extract_leaves(page.dom), page.labels);
  nlohmann::ordered_json doc;
  doc["page_id"] = page.page_id;
  doc["domain"] = page.domain;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : leaves) {
    nlohmann::ordered_json o;
    o["element_id"] = e.element_id;
    o["preorder_index"] = e.preorder_index;
    o["tag"] = e.tag;
    o["bbox"] = {e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h};
    o["label"] = label_name(e.label);
    arr.push_back(std::move(o));
  }
  doc["leaves"] = std::move(arr);
  doc["decoy_ids"] = page.decoy_ids;
  return doc.dump();
}

void generate(const SynthSpec& spec, const std::filesystem::path& out) {
  spec.validate();
  std::filesystem::create_directories(out / "pages");
  std::filesystem::create_directories(out / "leaves");
  std::vector<DatasetEntry> entries;
  std::vector<LabelManifest> labels;
  for (int i = 0; i < spec.n_pages; ++i) {
    SynthPage page = generate_page(spec, i, true);
    const auto rel_png = std::filesystem::path("pages") / (page.page_id + ".png");
    const auto rel_json = std::filesystem::path("pages") / (page.page_id + ".json");
    write_png(out / rel_png, page.screenshot);
    detail::write_file(out / rel_json, serialize_dom_dump(page.dom));
    detail::write_file(out / "leaves" / (page.page_id + ".json"), leaf_manifest_json(page));
    entries.push_back({page.page_id, page.domain, rel_png, rel_json});
    labels.push_back(page.labels);
  }
  write_dataset_manifest(out / "manifest.csv", entries);
  write_label_manifest(out / "labels.csv", labels);
}

}  // namespace cova
