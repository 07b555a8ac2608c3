#include "cova/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "cova/error.hpp"
#include "json.hpp"

namespace cova {

std::string_view metric_name(DistanceMetric metric) {
  return metric == DistanceMetric::Preorder ? "preorder" : "tree";
}

DistanceMetric metric_from_name(std::string_view name) {
  if (name == "preorder") return DistanceMetric::Preorder;
  if (name == "tree") return DistanceMetric::TreePath;
  throw ConfigError("unknown distance metric `" + std::string(name) + "`");
}

namespace {

// Elements sorted by preorder index, validating contiguity.
std::vector<const WebElement*> by_preorder(const std::vector<WebElement>& elements) {
  std::vector<const WebElement*> order(elements.size(), nullptr);
  for (const auto& e : elements) {
    if (e.preorder_index < 0 || static_cast<std::size_t>(e.preorder_index) >= elements.size() ||
        order[e.preorder_index] != nullptr) {
      throw ValidationError("preorder indices must be unique and contiguous");
    }
    order[e.preorder_index] = &e;
  }
  return order;
}

std::vector<int> ids_of(const std::vector<const WebElement*>& order, std::vector<int> positions) {
  std::sort(positions.begin(), positions.end());
  std::vector<int> ids;
  ids.reserve(positions.size());
  for (int p : positions) ids.push_back(order[p]->element_id);
  return ids;
}

class TreeDistance {
public:
  explicit TreeDistance(const DomDump& dom) : dom_(dom) {}

  int operator()(int a, int b) const {
    auto pa = path_to_root(a);
    auto pb = path_to_root(b);
    // Strip the common suffix (shared ancestors).
    std::size_t ia = pa.size(), ib = pb.size();
    while (ia > 0 && ib > 0 && pa[ia - 1] == pb[ib - 1]) {
      --ia;
      --ib;
    }
    return static_cast<int>(ia + ib);
  }

private:
  std::vector<int> path_to_root(int id) const {
    std::vector<int> path{id};
    for (int p = dom_.parent(id); p != -1; p = dom_.parent(p)) path.push_back(p);
    return path;
  }

  const DomDump& dom_;
};

}  // namespace

ContextGraph build_graph(const std::vector<WebElement>& elements, int k) {
  return build_graph(elements, k, DistanceMetric::Preorder, nullptr);
}

ContextGraph build_graph(const std::vector<WebElement>& elements, int k, DistanceMetric metric,
                         const DomDump* dom) {
  if (k < 0) throw ConfigError("k must be non-negative");
  auto order = by_preorder(elements);
  const int n = static_cast<int>(order.size());
  const int take = std::min(k, n - 1);

  ContextGraph graph;
  graph.k = k;
  if (metric == DistanceMetric::Preorder) {
    for (int i = 0; i < n; ++i) {
      // Expand outward; on equal distance the left (smaller index) side goes first.
      std::vector<int> picked;
      picked.reserve(take);
      int lo = i - 1, hi = i + 1;
      while (static_cast<int>(picked.size()) < take) {
        int dl = lo >= 0 ? i - lo : n + 1;
        int dr = hi < n ? hi - i : n + 1;
        if (dl <= dr) {
          picked.push_back(lo--);
        } else {
          picked.push_back(hi++);
        }
      }
      graph.neighbors[order[i]->element_id] = ids_of(order, std::move(picked));
    }
    return graph;
  }

  if (dom == nullptr) throw ConfigError("tree distance needs the DOM tree");
  TreeDistance dist(*dom);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, int>> cand;  // (distance, preorder)
    cand.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) cand.emplace_back(dist(order[i]->element_id, order[j]->element_id), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    std::vector<int> picked;
    for (int t = 0; t < take; ++t) picked.push_back(cand[t].second);
    graph.neighbors[order[i]->element_id] = ids_of(order, std::move(picked));
  }
  return graph;
}

ContextGraph neighborhood_complete(const std::vector<WebElement>& elements) {
  auto order = by_preorder(elements);
  const int n = static_cast<int>(order.size());
  ContextGraph graph;
  graph.k = std::max(0, n - 1);
  for (int i = 0; i < n; ++i) {
    std::vector<int> all;
    for (int j = 0; j < n; ++j) {
      if (j != i) all.push_back(j);
    }
    graph.neighbors[order[i]->element_id] = ids_of(order, std::move(all));
  }
  return graph;
}

std::string graph_to_json(const ContextGraph& graph) {
  nlohmann::ordered_json doc;
  doc["page_id"] = graph.page_id;
  doc["k"] = graph.k;
  nlohmann::ordered_json nb = nlohmann::ordered_json::object();
  for (const auto& [id, list] : graph.neighbors) nb[std::to_string(id)] = list;
  doc["neighbors"] = std::move(nb);
  return doc.dump();
}

}  // namespace cova
