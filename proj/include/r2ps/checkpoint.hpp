#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "r2ps/neural_core.hpp"

namespace r2ps {

// Checkpoint layout: magic "R2PSMDL1", u32 little-endian JSON header length,
// JSON header {component, normalize, config, tensors:[{name, shape, offset}]},
// then raw little-endian f32 tensor data in manifest order.
inline constexpr char kCheckpointMagic[8] = {'R', '2', 'P', 'S', 'M', 'D', 'L', '1'};

struct LoadedCheckpoint {
    EncoderParams params;
    std::string component; // "dual" or "cross"
    bool normalize = true;
};

std::vector<std::uint8_t> checkpoint_bytes(const EncoderParams& p, const std::string& component, bool normalize);
void save_checkpoint(const EncoderParams& p, const std::string& component, bool normalize, const std::string& path);
LoadedCheckpoint load_checkpoint(const std::string& path);

std::string fingerprint_hex(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

} // namespace r2ps
