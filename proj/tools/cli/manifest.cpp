#include "manifest.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

#include <json.hpp>

#include "csv.hpp"

namespace sqz::cli {

std::string sha256_hex(const std::string& data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string RunManifest::config_digest() const {
  std::string canonical = "command=" + command + "\n";
  for (const auto& [k, v] : config) canonical += k + "=" + v + "\n";
  if (seed) canonical += "seed=" + std::to_string(*seed) + "\n";
  for (const auto& path : input_files) canonical += "input=" + sha256_hex(read_file(path)) + "\n";
  return "sha256:" + sha256_hex(canonical);
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_digest"] = config_digest();
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  j["config"] = nlohmann::ordered_json(config);
  j["input_files"] = input_files;
  j["output_files"] = output_files;
  j["tool_version"] = tool_version;
  return j.dump(2) + "\n";
}

}  // namespace sqz::cli
