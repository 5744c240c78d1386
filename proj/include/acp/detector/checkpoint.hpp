#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "acp/detector/config.hpp"
#include "acp/detector/losses.hpp"
#include "acp/detector/network.hpp"

namespace acp::detector {

inline constexpr char kCheckpointMagic[8] = {'A', 'C', 'P', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CheckpointMetadata {
    int iterations_run = 0;
    int best_step = -1;  // -1: no validation was run
    double best_val_loss = 0.0;
    LossBreakdown final_losses;
    std::uint64_t split_seed = 0;
    std::string created_at;  // ISO-8601 UTC; excluded from reproducibility comparisons
};

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
};

struct Checkpoint {
    DetectorConfig config;
    CheckpointMetadata metadata;
    std::vector<NamedTensor> tensors;

    /// Weights copied out of a network (float32).
    static Checkpoint from_network(const Network& net, CheckpointMetadata metadata);
    /// Rebuilds the network and loads the weights. Throws CheckpointError when
    /// tensor names or shapes do not match the config.
    Network to_network() const;
};

/// Layout: 8-byte magic, uint32 version, uint64 header length, JSON header,
/// then the tensors as little-endian float32 at the offsets named in the header.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace acp::detector
