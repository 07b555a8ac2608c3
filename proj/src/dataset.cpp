#include "cova/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "cova/error.hpp"
#include "cova/model.hpp"
#include "csv.hpp"

namespace cova {

std::vector<const Webpage*> Dataset::all() const {
  std::vector<const Webpage*> out;
  for (const auto& p : pages) out.push_back(&p);
  return out;
}

std::vector<const Webpage*> Dataset::by_domains(const std::vector<std::string>& domains) const {
  std::set<std::string> keep(domains.begin(), domains.end());
  std::vector<const Webpage*> out;
  for (const auto& p : pages) {
    if (keep.contains(p.domain)) out.push_back(&p);
  }
  return out;
}

namespace {

std::optional<std::filesystem::path> default_labels(const std::filesystem::path& manifest,
                                                    std::optional<std::filesystem::path> labels) {
  if (labels) return labels;
  auto guess = manifest.parent_path() / "labels.csv";
  if (std::filesystem::exists(guess)) return guess;
  return std::nullopt;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest, std::optional<std::filesystem::path> labels,
                     const PruneConfig& prune) {
  Dataset ds;
  ds.manifest_path = manifest;
  auto entries = read_dataset_manifest(manifest);
  if (entries.empty()) throw EmptyDatasetError(manifest.string() + ": no pages");
  std::map<std::string, LabelManifest> label_rows;
  if (auto path = default_labels(manifest, std::move(labels))) label_rows = read_label_manifest(*path);
  ds.pages.reserve(entries.size());
  for (const auto& e : entries) {
    auto it = label_rows.find(e.page_id);
    ds.pages.push_back(load_webpage(e, it == label_rows.end() ? nullptr : &it->second, prune));
  }
  return ds;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string dataset_hash(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& labels) {
  std::uint64_t h = fnv1a(detail::read_file(manifest));
  if (auto path = default_labels(manifest, labels)) h = fnv1a(detail::read_file(*path), h);
  for (const auto& e : read_dataset_manifest(manifest)) {
    h = fnv1a(detail::read_file(e.dom_path), h);
    if (std::filesystem::exists(e.screenshot_path)) h = fnv1a(detail::read_file(e.screenshot_path), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Image load_screenshot(const Webpage& page) { return read_png(page.screenshot_ref); }

PooledCache compute_pooled(const CovaModel& model, const std::vector<const Webpage*>& pages, const ImageLoader& loader) {
  PooledCache cache;
  for (const Webpage* p : pages) {
    FeatureMap fmap = model.backbone().forward(loader(*p), false);
    cache[p->page_id] = model.pool_page(*p, fmap);
  }
  return cache;
}

}  // namespace cova
