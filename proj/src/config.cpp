#include "collapse/config.hpp"

#include <fstream>
#include <stdexcept>

namespace collapse {

void to_json(nlohmann::json& j, const ProfileSpec& p) {
  j = {{"kind", to_string(p.kind)}, {"gamma", p.gamma}, {"n", p.n}, {"a", p.a}, {"samples_path", p.samples_path}};
}

void from_json(const nlohmann::json& j, ProfileSpec& p) {
  const ProfileSpec d;
  p.kind = parse_profile_kind(j.value("kind", to_string(d.kind)));
  p.gamma = j.value("gamma", d.gamma);
  p.n = j.value("n", d.n);
  p.a = j.value("a", d.a);
  p.samples_path = j.value("samples_path", d.samples_path);
}

namespace {

void check_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& path) {
  if (!given.is_object()) throw std::invalid_argument("config: " + (path.empty() ? "top level" : path) + " must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!known.contains(key)) throw std::invalid_argument("config: unknown key " + where);
    if (known[key].is_object()) check_keys(value, known[key], where);
  }
}

}  // namespace

nlohmann::json to_json(const Config& c) {
  return {{"profile", c.profile},       {"threads", c.threads},     {"out_dir", c.out_dir},
          {"validation", c.validation}, {"dust", c.dust},           {"hierarchy", c.hierarchy},
          {"residual", c.residual},     {"simulate", c.simulate},   {"suite", c.suite}};
}

Config config_from_json(const nlohmann::json& j) {
  check_keys(j, to_json(Config{}), "");
  Config c;
  try {
    if (j.contains("profile")) c.profile = j["profile"].get<ProfileSpec>();
    c.threads = j.value("threads", c.threads);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("validation")) c.validation = j["validation"].get<ValidationSection>();
    if (j.contains("dust")) c.dust = j["dust"].get<DustSection>();
    if (j.contains("hierarchy")) c.hierarchy = j["hierarchy"].get<HierarchySection>();
    if (j.contains("residual")) c.residual = j["residual"].get<ResidualSection>();
    if (j.contains("simulate")) c.simulate = j["simulate"].get<SimulateSection>();
    if (j.contains("suite")) c.suite = j["suite"].get<SuiteSection>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace collapse
