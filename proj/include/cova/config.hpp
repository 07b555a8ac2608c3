#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "cova/synth.hpp"
#include "cova/train.hpp"

namespace cova {

// Flat `key = value` lines; `#` starts a comment. Throws ConfigError on malformed or repeated keys.
using KvConfig = std::map<std::string, std::string>;
KvConfig parse_kv(std::string_view text);
KvConfig load_kv(const std::filesystem::path& path);
std::string dump_kv(const KvConfig& kv);

// Apply keys on top of `base`; unknown keys and unparsable values raise ConfigError.
TrainConfig apply_train_config(const KvConfig& kv, TrainConfig base = {});
SynthSpec apply_synth_spec(const KvConfig& kv, SynthSpec base = {});

KvConfig to_kv(const TrainConfig& c);
KvConfig to_kv(const SynthSpec& s);

}  // namespace cova
