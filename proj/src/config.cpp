#include "cova/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "cova/error.hpp"
#include "csv.hpp"

namespace cova {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("`" + key + "`: cannot parse `" + v + "`");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("`" + key + "`: expected a boolean, got `" + v + "`");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

using Setter = std::function<void(const std::string&, const std::string&)>;

void apply_setters(const KvConfig& kv, const std::map<std::string, Setter>& setters) {
  for (const auto& [k, v] : kv) {
    auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key `" + k + "`");
    it->second(k, v);
  }
}

}  // namespace

KvConfig parse_kv(std::string_view text) {
  KvConfig kv;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) throw ConfigError("line " + std::to_string(line_no) + ": repeated key `" + key + "`");
  }
  return kv;
}

KvConfig load_kv(const std::filesystem::path& path) { return parse_kv(detail::read_file(path)); }

std::string dump_kv(const KvConfig& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

TrainConfig apply_train_config(const KvConfig& kv, TrainConfig c) {
  auto dbl = [](double& f) { return [&f](const std::string& k, const std::string& v) { f = parse_number<double>(k, v); }; };
  auto integer = [](int& f) { return [&f](const std::string& k, const std::string& v) { f = parse_number<int>(k, v); }; };
  auto boolean = [](bool& f) { return [&f](const std::string& k, const std::string& v) { f = parse_bool(k, v); }; };
  std::map<std::string, Setter> s{
      {"lr", dbl(c.lr)},
      {"batch_pages", integer(c.batch_pages)},
      {"weight_decay", dbl(c.weight_decay)},
      {"max_epochs", integer(c.max_epochs)},
      {"bg_sampling", boolean(c.bg_sampling)},
      {"bg_sample_frac", dbl(c.bg_sample_frac)},
      {"early_stop_patience", integer(c.early_stop_patience)},
      {"seed", [&c](const std::string& k, const std::string& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"k", integer(c.k)},
      {"metric", [&c](const std::string&, const std::string& v) { c.metric = metric_from_name(v); }},
      {"use_context", boolean(c.use_context)},
      {"use_positional", boolean(c.use_positional)},
      {"use_extra_features", boolean(c.use_extra_features)},
      {"freeze_backbone", boolean(c.freeze_backbone)},
      {"backbone", [&c](const std::string&, const std::string& v) { c.backbone = backbone_from_name(v); }},
      {"backbone_channels", integer(c.backbone_channels)},
      {"pos_dim", integer(c.pos_dim)},
      {"proj_dim", integer(c.proj_dim)},
      {"hidden_dim", integer(c.hidden_dim)},
      {"dropout", dbl(c.dropout)},
  };
  apply_setters(kv, s);
  c.validate();
  return c;
}

SynthSpec apply_synth_spec(const KvConfig& kv, SynthSpec spec) {
  auto integer = [](int& f) { return [&f](const std::string& k, const std::string& v) { f = parse_number<int>(k, v); }; };
  std::map<std::string, Setter> s{
      {"n_pages", integer(spec.n_pages)},
      {"n_domains", integer(spec.n_domains)},
      {"elements_per_page", integer(spec.elements_per_page)},
      {"n_decoy_prices", integer(spec.n_decoy_prices)},
      {"k_default", integer(spec.k_default)},
      {"seed", [&spec](const std::string& k, const std::string& v) { spec.seed = parse_number<std::uint64_t>(k, v); }},
  };
  apply_setters(kv, s);
  spec.validate();
  return spec;
}

KvConfig to_kv(const TrainConfig& c) {
  return {{"lr", fmt(c.lr)},
          {"batch_pages", std::to_string(c.batch_pages)},
          {"weight_decay", fmt(c.weight_decay)},
          {"max_epochs", std::to_string(c.max_epochs)},
          {"bg_sampling", fmt(c.bg_sampling)},
          {"bg_sample_frac", fmt(c.bg_sample_frac)},
          {"early_stop_patience", std::to_string(c.early_stop_patience)},
          {"seed", std::to_string(c.seed)},
          {"k", std::to_string(c.k)},
          {"metric", std::string(metric_name(c.metric))},
          {"use_context", fmt(c.use_context)},
          {"use_positional", fmt(c.use_positional)},
          {"use_extra_features", fmt(c.use_extra_features)},
          {"freeze_backbone", fmt(c.freeze_backbone)},
          {"backbone", std::string(backbone_name(c.backbone))},
          {"backbone_channels", std::to_string(c.backbone_channels)},
          {"pos_dim", std::to_string(c.pos_dim)},
          {"proj_dim", std::to_string(c.proj_dim)},
          {"hidden_dim", std::to_string(c.hidden_dim)},
          {"dropout", fmt(c.dropout)}};
}

KvConfig to_kv(const SynthSpec& s) {
  return {{"n_pages", std::to_string(s.n_pages)},
          {"n_domains", std::to_string(s.n_domains)},
          {"elements_per_page", std::to_string(s.elements_per_page)},
          {"n_decoy_prices", std::to_string(s.n_decoy_prices)},
          {"k_default", std::to_string(s.k_default)},
          {"seed", std::to_string(s.seed)}};
}

}  // namespace cova
