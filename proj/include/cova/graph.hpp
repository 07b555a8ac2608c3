#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cova/dom.hpp"

namespace cova {

enum class DistanceMetric { Preorder, TreePath };

std::string_view metric_name(DistanceMetric metric);
DistanceMetric metric_from_name(std::string_view name);

// Per-element context: the K nearest leaves of each element.
struct ContextGraph {
  std::string page_id;
  int k = 0;
  // element_id -> neighbour element_ids sorted by preorder index.
  std::map<int, std::vector<int>> neighbors;

  const std::vector<int>& of(int element_id) const { return neighbors.at(element_id); }
};

// Nearest min(k, N-1) leaves under |preorder(i) - preorder(j)|, ties toward the smaller index.
ContextGraph build_graph(const std::vector<WebElement>& elements, int k);

// Same selection rule under DOM shortest-path distance. Needs the tree the elements came from.
ContextGraph build_graph(const std::vector<WebElement>& elements, int k, DistanceMetric metric,
                         const DomDump* dom);

// Every other element is a neighbour.
ContextGraph neighborhood_complete(const std::vector<WebElement>& elements);

std::string graph_to_json(const ContextGraph& graph);

}  // namespace cova
