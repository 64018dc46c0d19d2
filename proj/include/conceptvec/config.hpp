#pragma once

// Flat key=value config files and the per-run manifest every CLI subcommand
// writes next to its outputs.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace conceptvec {

inline constexpr std::string_view kToolVersion = "conceptvec 1.0.0";

// `key = value` per line; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> load_key_value_config(std::istream& in);
std::map<std::string, std::string> load_key_value_config_file(const std::string& path);

struct Manifest {
  std::string subcommand;
  std::string tool_version{kToolVersion};
  std::map<std::string, std::string> parameters;  // every effective value
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  uint64_t seed = 0;
  double wall_clock_seconds = 0;
  std::map<std::string, std::string> extra;  // digests, counts

  std::string to_json() const;
};

void write_manifest(const Manifest& manifest, const std::string& path);

}  // namespace conceptvec
