#include "cova/dom.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"

#include "cova/error.hpp"
#include "csv.hpp"

namespace cova {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field `" + key + "`");
  return *it;
}

double finite_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(where + ": non-finite number");
  return d;
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return v.get<int>();
}

DomNode parse_node(const json& obj, std::size_t position) {
  std::string where = "nodes[" + std::to_string(position) + "]";
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  DomNode node;
  node.id = integer(require(obj, "id", where), where + ".id");
  const json& tag = require(obj, "tag", where);
  if (!tag.is_string()) throw SchemaError(where + ".tag: expected a string");
  node.tag = upper(tag.get<std::string>());

  const json& bbox = require(obj, "bbox", where);
  if (!bbox.is_array() || bbox.size() != 4) throw SchemaError(where + ".bbox: expected [x,y,w,h]");
  node.bbox = {finite_number(bbox[0], where + ".bbox"), finite_number(bbox[1], where + ".bbox"),
               finite_number(bbox[2], where + ".bbox"), finite_number(bbox[3], where + ".bbox")};
  if (node.bbox.w < 0 || node.bbox.h < 0) {
    throw BoundsError(where + ": negative box extent for node " + std::to_string(node.id));
  }

  if (auto it = obj.find("text"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(where + ".text: expected string or null");
    node.text = it->get<std::string>();
  }
  if (auto it = obj.find("font_size"); it != obj.end() && !it->is_null()) {
    node.font_size = finite_number(*it, where + ".font_size");
  }
  const json& children = require(obj, "children", where);
  if (!children.is_array()) throw SchemaError(where + ".children: expected an array");
  for (const auto& c : children) node.children.push_back(integer(c, where + ".children"));
  return node;
}

}  // namespace

DomDump::DomDump(std::string version, Viewport viewport, int root, std::vector<DomNode> nodes)
    : version_(std::move(version)), viewport_(viewport), root_(root), nodes_(std::move(nodes)) {
  if (viewport_.width <= 0 || viewport_.height <= 0) throw SchemaError("viewport must be positive");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i].id, i).second) {
      throw SchemaError("duplicate node id " + std::to_string(nodes_[i].id));
    }
    if (nodes_[i].bbox.w < 0 || nodes_[i].bbox.h < 0) {
      throw BoundsError("negative box extent for node " + std::to_string(nodes_[i].id));
    }
  }
  if (!index_.contains(root_)) throw SchemaError("root " + std::to_string(root_) + " is not a node");

  for (const auto& n : nodes_) {
    for (int c : n.children) {
      if (c == n.id) throw CycleError("node " + std::to_string(n.id) + " lists itself as a child");
      if (!index_.contains(c)) {
        throw SchemaError("node " + std::to_string(n.id) + " references unknown child " + std::to_string(c));
      }
    }
  }

  // Three-colour DFS from every node so cycles in detached components are caught too.
  enum : std::uint8_t { White, Grey, Black };
  std::vector<std::uint8_t> colour(nodes_.size(), White);
  for (std::size_t start = 0; start < nodes_.size(); ++start) {
    if (colour[start] != White) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    colour[start] = Grey;
    while (!stack.empty()) {
      auto& [idx, next] = stack.back();
      const auto& children = nodes_[idx].children;
      if (next == children.size()) {
        colour[idx] = Black;
        stack.pop_back();
        continue;
      }
      std::size_t child = index_.at(children[next++]);
      if (colour[child] == Grey) {
        throw CycleError("cycle through node " + std::to_string(nodes_[child].id));
      }
      if (colour[child] == White) {
        colour[child] = Grey;
        stack.emplace_back(child, 0);
      }
    }
  }

  for (const auto& n : nodes_) {
    for (int c : n.children) {
      if (!parent_.emplace(c, n.id).second) {
        throw SchemaError("node " + std::to_string(c) + " has more than one parent");
      }
    }
  }
  if (parent_.contains(root_)) throw SchemaError("root node has a parent");
}

const DomNode& DomDump::node(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw MissingElementError("no node with id " + std::to_string(id));
  return nodes_[it->second];
}

int DomDump::parent(int id) const {
  auto it = parent_.find(id);
  return it == parent_.end() ? -1 : it->second;
}

int DomDump::depth(int id) const {
  int d = 0;
  for (int p = parent(id); p != -1; p = parent(p)) ++d;
  return d;
}

DomDump parse_dom_dump(std::string_view raw, std::string_view schema_version) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("top level must be an object");
  const json& version = require(doc, "version", "dump");
  if (!version.is_string() || version.get<std::string>() != schema_version) {
    throw SchemaError("unsupported schema version (expected \"" + std::string(schema_version) + "\")");
  }
  const json& vp = require(doc, "viewport", "dump");
  if (!vp.is_array() || vp.size() != 2) throw SchemaError("viewport: expected [width,height]");
  Viewport viewport{integer(vp[0], "viewport"), integer(vp[1], "viewport")};

  const json& nodes_json = require(doc, "nodes", "dump");
  if (!nodes_json.is_array()) throw SchemaError("nodes: expected an array");
  std::vector<DomNode> nodes;
  nodes.reserve(nodes_json.size());
  for (std::size_t i = 0; i < nodes_json.size(); ++i) nodes.push_back(parse_node(nodes_json[i], i));

  int root = integer(require(doc, "root", "dump"), "root");
  return DomDump(version.get<std::string>(), viewport, root, std::move(nodes));
}

std::string serialize_dom_dump(const DomDump& dom) {
  ordered_json doc;
  doc["version"] = dom.version();
  doc["viewport"] = {dom.viewport().width, dom.viewport().height};
  ordered_json nodes = ordered_json::array();
  for (const auto& n : dom.nodes()) {
    ordered_json node;
    node["id"] = n.id;
    node["tag"] = n.tag;
    node["bbox"] = {n.bbox.x, n.bbox.y, n.bbox.w, n.bbox.h};
    node["text"] = n.text ? ordered_json(*n.text) : ordered_json(nullptr);
    node["font_size"] = n.font_size ? ordered_json(*n.font_size) : ordered_json(nullptr);
    node["children"] = n.children;
    nodes.push_back(std::move(node));
  }
  doc["nodes"] = std::move(nodes);
  doc["root"] = dom.root();
  return doc.dump();
}

DomDump load_dom_dump(const std::filesystem::path& path) {
  return parse_dom_dump(detail::read_file(path));
}

namespace {

bool survives(const DomNode& node, const PruneConfig& prune, const Viewport& vp) {
  if (prune.tag_blocklist.contains(node.tag)) return false;
  if (prune.drop_zero_area && node.bbox.area() <= 0.0) return false;
  if (prune.drop_offscreen) {
    const auto& b = node.bbox;
    if (b.x >= vp.width || b.y >= vp.height || b.right() <= 0.0 || b.bottom() <= 0.0) return false;
  }
  return true;
}

}  // namespace

std::vector<WebElement> extract_leaves(const DomDump& dom, const PruneConfig& prune) {
  const Viewport& vp = dom.viewport();
  std::vector<WebElement> leaves;
  const DomNode& root = dom.node(dom.root());
  if (!survives(root, prune, vp)) throw EmptyPageError("root node is pruned");

  std::vector<const DomNode*> stack{&root};
  while (!stack.empty()) {
    const DomNode* node = stack.back();
    stack.pop_back();
    std::vector<const DomNode*> kept;
    for (int c : node->children) {
      const DomNode& child = dom.node(c);
      if (survives(child, prune, vp)) kept.push_back(&child);
    }
    if (kept.empty()) {
      WebElement e;
      e.element_id = node->id;
      e.bbox = clip_to_viewport(node->bbox, vp.width, vp.height);
      e.tag = node->tag;
      e.text = node->text;
      e.font_size = node->font_size;
      e.preorder_index = static_cast<int>(leaves.size());
      leaves.push_back(std::move(e));
    }
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) stack.push_back(*it);
  }
  if (leaves.empty()) throw EmptyPageError("no leaves survive pruning");
  return leaves;
}

std::vector<WebElement> attach_labels(std::vector<WebElement> elements, const LabelManifest& labels) {
  for (auto& e : elements) e.label = Label::Background;
  auto assign = [&](const std::optional<int>& id, Label label) {
    if (!id) return;
    auto it = std::find_if(elements.begin(), elements.end(), [&](const WebElement& e) { return e.element_id == *id; });
    if (it == elements.end()) {
      throw MissingElementError("page " + labels.page_id + ": " + std::string(label_name(label)) + " id " +
                                std::to_string(*id) + " is not a leaf element");
    }
    if (it->label != Label::Background) {
      throw DuplicateLabelError("page " + labels.page_id + ": element " + std::to_string(*id) + " labeled both " +
                                std::string(label_name(it->label)) + " and " + std::string(label_name(label)));
    }
    it->label = label;
  };
  assign(labels.price_id, Label::Price);
  assign(labels.title_id, Label::Title);
  assign(labels.image_id, Label::Image);
  return elements;
}

int Webpage::index_of(int element_id) const {
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (elements[i].element_id == element_id) return static_cast<int>(i);
  }
  return -1;
}

std::optional<int> Webpage::labeled(Label label) const {
  for (const auto& e : elements) {
    if (e.label == label) return e.element_id;
  }
  return std::nullopt;
}

std::vector<DatasetEntry> read_dataset_manifest(const std::filesystem::path& path) {
  auto rows = detail::expect_csv(path, {"page_id", "domain", "screenshot_path", "dom_path"});
  auto base = path.parent_path();
  std::vector<DatasetEntry> entries;
  std::set<std::string> seen;
  for (auto& row : rows) {
    if (!seen.insert(row[0]).second) throw SchemaError(path.string() + ": duplicate page_id " + row[0]);
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    entries.push_back({row[0], row[1], resolve(row[2]), resolve(row[3])});
  }
  return entries;
}

void write_dataset_manifest(const std::filesystem::path& path, const std::vector<DatasetEntry>& entries) {
  std::string out = "page_id,domain,screenshot_path,dom_path\n";
  for (const auto& e : entries) {
    out += detail::csv_escape(e.page_id) + "," + detail::csv_escape(e.domain) + "," +
           detail::csv_escape(e.screenshot_path.generic_string()) + "," +
           detail::csv_escape(e.dom_path.generic_string()) + "\n";
  }
  detail::write_file(path, out);
}

std::map<std::string, LabelManifest> read_label_manifest(const std::filesystem::path& path) {
  auto rows = detail::expect_csv(path, {"page_id", "price_id", "title_id", "image_id"});
  std::map<std::string, LabelManifest> out;
  auto cell = [&](const std::string& s) -> std::optional<int> {
    if (s.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw SchemaError(path.string() + ": bad element id `" + s + "`");
    }
  };
  for (const auto& row : rows) {
    LabelManifest m{row[0], cell(row[1]), cell(row[2]), cell(row[3])};
    if (!out.emplace(row[0], m).second) throw SchemaError(path.string() + ": duplicate page_id " + row[0]);
  }
  return out;
}

void write_label_manifest(const std::filesystem::path& path, const std::vector<LabelManifest>& rows) {
  std::string out = "page_id,price_id,title_id,image_id\n";
  auto cell = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& r : rows) {
    out += detail::csv_escape(r.page_id) + "," + cell(r.price_id) + "," + cell(r.title_id) + "," +
           cell(r.image_id) + "\n";
  }
  detail::write_file(path, out);
}

Webpage load_webpage(const DatasetEntry& entry, const LabelManifest* labels, const PruneConfig& prune) {
  auto dom = std::make_shared<const DomDump>(load_dom_dump(entry.dom_path));
  Webpage page;
  page.page_id = entry.page_id;
  page.domain = entry.domain;
  page.screenshot_ref = entry.screenshot_path;
  page.elements = extract_leaves(*dom, prune);
  if (labels) {
    page.elements = attach_labels(std::move(page.elements), *labels);
    page.fully_labeled = labels->complete();
  }
  page.dom = std::move(dom);
  return page;
}

}  // namespace cova
