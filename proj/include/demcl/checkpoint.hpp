#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "demcl/io.hpp"
#include "demcl/network.hpp"

namespace demcl {

/// One named tensor in an MDCK checkpoint. Payload is single precision.
struct CheckpointEntry {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<float> data;
};

// MDCK checkpoint: magic "MDCK", u32 version, u32 entry count; per entry
// u16 name length, name bytes, u8 rank, u32 dims..., f32 payload (all
// little-endian).
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);

/// Entries describing a network under `prefix/`: one `meta` entry per layer
/// (layer hyperparameters) followed by its parameter tensors.
std::vector<CheckpointEntry> network_entries(Network& net, const std::string& prefix);

/// Rebuilds a network from its `prefix/` entries. Unknown layer kinds in
/// the checkpoint raise an unsupported-layer error.
Network network_from_entries(const std::vector<CheckpointEntry>& entries,
                             const std::string& prefix);

/// Single scalar entry helpers (normalization constants, config scalars).
CheckpointEntry scalar_entry(const std::string& name, double value);
double scalar_value(const std::vector<CheckpointEntry>& entries, const std::string& name);
const CheckpointEntry* find_entry(const std::vector<CheckpointEntry>& entries,
                                  const std::string& name);

void save_network(const std::filesystem::path& path, Network& net,
                  const std::string& prefix = "net");
Network load_network(const std::filesystem::path& path, const std::string& prefix = "net");

}  // namespace demcl
