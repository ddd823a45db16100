#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sqz::cli {

/// Provenance record written next to each output file. It carries no
/// timestamps, so identical runs produce identical manifests.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // normalized effective settings
  std::optional<std::uint64_t> seed;
  std::vector<std::string> input_files;
  std::vector<std::string> output_files;
  std::string tool_version;

  /// "sha256:<hex>" over the command, the sorted config and the contents of
  /// every input file. Output paths do not contribute.
  std::string config_digest() const;
  std::string to_json() const;
};

std::string sha256_hex(const std::string& data);

}  // namespace sqz::cli
