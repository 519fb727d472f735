#include "ekl/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ekl {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for digest: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a64(buf.str()));
}

std::string config_hash(const nlohmann::json& config) {
  return hex64(fnv1a64(config.dump()));
}

void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& command,
                    std::uint64_t seed, const nlohmann::json& config,
                    const std::vector<std::pair<std::string, std::string>>& input_digests) {
  nlohmann::json m;
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["seed"] = seed;
  m["config_hash"] = config_hash(config);
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [name, digest] : input_digests) inputs[name] = digest;
  m["inputs"] = std::move(inputs);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << "\n";
}

}  // namespace ekl
