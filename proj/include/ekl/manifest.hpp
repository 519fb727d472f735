#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ekl {

inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// fnv1a64 over the file contents, as a fixed-width hex string.
std::string file_digest(const std::filesystem::path& path);

// Digest of the canonical (sorted-key) JSON dump; identical configs hash
// identically regardless of construction order.
std::string config_hash(const nlohmann::json& config);

// Writes manifest.json next to the artifacts: command echo, seed, config
// hash, input digests, tool version. Wall-clock timing deliberately stays out
// so repeated runs produce byte-identical directories.
void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& command,
                    std::uint64_t seed, const nlohmann::json& config,
                    const std::vector<std::pair<std::string, std::string>>& input_digests);

}  // namespace ekl
