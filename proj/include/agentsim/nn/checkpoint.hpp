#ifndef AGENTSIM__NN__CHECKPOINT_HPP_
#define AGENTSIM__NN__CHECKPOINT_HPP_

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace agentsim::nn
{
struct NamedArray
{
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

/**
 * @brief Versioned binary container.
 *
 * Layout: 8-byte magic "AGSIMCKP", uint32 format version, uint64 header
 * length, UTF-8 JSON header, then the arrays as raw little-endian float64 in
 * header order. The header holds "meta" (caller-defined) and "arrays"
 * (name, rows, cols).
 */
struct Checkpoint
{
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray * find(const std::string & name) const;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

void save_checkpoint(const std::filesystem::path & path, const Checkpoint & checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path & path);

/// FNV-1a 64 over the given JSON (compact dump) and the array names, shapes and bytes.
std::uint64_t content_fingerprint(const nlohmann::json & meta, const std::vector<const NamedArray *> & arrays);

std::string fingerprint_hex(std::uint64_t fingerprint);
}  // namespace agentsim::nn

#endif  // AGENTSIM__NN__CHECKPOINT_HPP_
