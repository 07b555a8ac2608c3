#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cova/dom.hpp"
#include "cova/image.hpp"
#include "cova/nn.hpp"

namespace cova {

class CovaModel;

// Pages loaded from a dataset manifest. Pointers handed out stay valid for the dataset's lifetime.
struct Dataset {
  std::filesystem::path manifest_path;
  std::vector<Webpage> pages;

  std::vector<const Webpage*> all() const;
  // Pages whose domain is in the list, in manifest order.
  std::vector<const Webpage*> by_domains(const std::vector<std::string>& domains) const;
};

// Labels default to labels.csv next to the manifest when that file exists.
Dataset load_dataset(const std::filesystem::path& manifest, std::optional<std::filesystem::path> labels = std::nullopt,
                     const PruneConfig& prune = {});

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
// Hash over the manifest, label file and every referenced DOM and screenshot file.
std::string dataset_hash(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& labels = std::nullopt);

using ImageLoader = std::function<Image(const Webpage&)>;
// Reads the page's screenshot_ref.
Image load_screenshot(const Webpage& page);

// Pooled backbone features per page id. Only valid for the backbone that produced them.
using PooledCache = std::map<std::string, Mat>;
PooledCache compute_pooled(const CovaModel& model, const std::vector<const Webpage*>& pages, const ImageLoader& loader);

}  // namespace cova
