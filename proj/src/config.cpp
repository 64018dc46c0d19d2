#include "conceptvec/config.hpp"

#include <fstream>
#include <istream>

#include <json.hpp>

#include "conceptvec/util.hpp"

namespace conceptvec {

std::map<std::string, std::string> load_key_value_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto sv = std::string_view(line);
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    std::string key(trim(sv.substr(0, eq)));
    std::string value(trim(sv.substr(eq + 1)));
    if (key.empty() || value.empty())
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty key or value");
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> load_key_value_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return load_key_value_config(in);
}

std::string Manifest::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["tool_version"] = tool_version;
  j["parameters"] = parameters;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["seed"] = seed;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["extra"] = extra;
  return j.dump(2) + "\n";
}

void write_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << manifest.to_json();
}

}  // namespace conceptvec
