#ifndef VQAE_CHECKSUM_H_
#define VQAE_CHECKSUM_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace vqae {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace vqae

#endif  // VQAE_CHECKSUM_H_
