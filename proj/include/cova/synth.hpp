#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cova/dom.hpp"
#include "cova/image.hpp"

namespace cova {

struct SynthSpec {
  int n_pages = 500;
  // Templates; each acts as one domain.
  int n_domains = 40;
  // Leaves per page after pruning, padded exactly.
  int elements_per_page = 90;
  int n_decoy_prices = 1;
  std::uint64_t seed = 0;
  // Decoys sit more than this many preorder steps from the title and images.
  int k_default = 24;

  void validate() const;
};

struct SynthPage {
  std::string page_id;
  std::string domain;
  int template_id = 0;
  // Product block in the first layout slot (and first in DOM order).
  bool product_first = true;
  DomDump dom;
  Image screenshot;  // empty when not rendered
  LabelManifest labels;
  std::vector<int> decoy_ids;
};

std::string synth_page_id(int index);
std::string synth_domain(int template_id);

// Page `index` of the dataset. Throws SpecError when the layout cannot hold the requested elements.
SynthPage generate_page(const SynthSpec& spec, int index, bool render = true);

// Writes manifest.csv, labels.csv, pages/<id>.json, pages/<id>.png and leaves/<id>.json under `out`.
void generate(const SynthSpec& spec, const std::filesystem::path& out);

// Ingested view of a generated page (leaves, labels, shared DOM); screenshot_ref stays empty.
Webpage to_webpage(const SynthPage& page, const PruneConfig& prune = {});

// Leaves in preorder with ids, tags, boxes and labels.
std::string leaf_manifest_json(const SynthPage& page);

}  // namespace cova
