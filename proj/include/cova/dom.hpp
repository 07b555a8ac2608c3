#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cova/types.hpp"

namespace cova {

inline constexpr std::string_view kDomSchemaVersion = "1";

struct DomNode {
  int id = 0;
  std::string tag;  // uppercase
  BBox bbox;
  std::optional<std::string> text;
  std::optional<double> font_size;
  std::vector<int> children;
};

// A validated rendered DOM tree. Node order follows the input document.
class DomDump {
public:
  DomDump(std::string version, Viewport viewport, int root, std::vector<DomNode> nodes);

  const std::string& version() const { return version_; }
  const Viewport& viewport() const { return viewport_; }
  int root() const { return root_; }
  const std::vector<DomNode>& nodes() const { return nodes_; }

  const DomNode& node(int id) const;
  bool contains(int id) const { return index_.contains(id); }
  // -1 for the root.
  int parent(int id) const;
  int depth(int id) const;

private:
  std::string version_;
  Viewport viewport_;
  int root_;
  std::vector<DomNode> nodes_;
  std::unordered_map<int, std::size_t> index_;
  std::unordered_map<int, int> parent_;
};

// Parses the JSON dump format; throws SchemaError, CycleError or BoundsError.
DomDump parse_dom_dump(std::string_view raw, std::string_view schema_version = kDomSchemaVersion);
// Canonical serialization (fixed key order, nodes in stored order).
std::string serialize_dom_dump(const DomDump& dom);

DomDump load_dom_dump(const std::filesystem::path& path);

struct PruneConfig {
  std::set<std::string> tag_blocklist{"SCRIPT", "STYLE", "NOSCRIPT", "META", "LINK"};
  bool drop_zero_area = true;
  bool drop_offscreen = true;
};

struct WebElement {
  int element_id = 0;
  BBox bbox;
  std::string tag;
  std::optional<std::string> text;
  std::optional<double> font_size;
  Label label = Label::Background;
  int preorder_index = 0;
};

// Leaves of the pruned tree in DOM preorder with contiguous preorder_index.
// A pruned node takes its whole subtree with it. Boxes are clipped to the viewport.
// Throws EmptyPageError when nothing survives.
std::vector<WebElement> extract_leaves(const DomDump& dom, const PruneConfig& prune = {});

struct LabelManifest {
  std::string page_id;
  std::optional<int> price_id;
  std::optional<int> title_id;
  std::optional<int> image_id;

  bool complete() const { return price_id && title_id && image_id; }
};

// Assigns PRICE/TITLE/IMAGE from the manifest, BACKGROUND elsewhere.
// Throws DuplicateLabelError when one element gets two labels and
// MissingElementError for ids that are not leaves of the page.
std::vector<WebElement> attach_labels(std::vector<WebElement> elements, const LabelManifest& labels);

struct Webpage {
  std::string page_id;
  std::string domain;
  std::filesystem::path screenshot_ref;
  std::vector<WebElement> elements;
  std::shared_ptr<const DomDump> dom;
  bool fully_labeled = false;

  std::size_t size() const { return elements.size(); }
  // Row of the element with this id, or -1.
  int index_of(int element_id) const;
  std::optional<int> labeled(Label label) const;
};

struct DatasetEntry {
  std::string page_id;
  std::string domain;
  std::filesystem::path screenshot_path;
  std::filesystem::path dom_path;
};

// `page_id,domain,screenshot_path,dom_path`; relative paths resolve against the manifest directory.
std::vector<DatasetEntry> read_dataset_manifest(const std::filesystem::path& path);
void write_dataset_manifest(const std::filesystem::path& path, const std::vector<DatasetEntry>& entries);

// `page_id,price_id,title_id,image_id`; empty cells mean "unlabeled".
std::map<std::string, LabelManifest> read_label_manifest(const std::filesystem::path& path);
void write_label_manifest(const std::filesystem::path& path, const std::vector<LabelManifest>& rows);

Webpage load_webpage(const DatasetEntry& entry, const LabelManifest* labels, const PruneConfig& prune = {});

}  // namespace cova
