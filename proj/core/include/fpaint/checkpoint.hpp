#pragma once

#include <map>
#include <string>
#include <vector>

#include "fpaint/params.hpp"

namespace fpaint {

// Checkpoint format, magic "FPCK": u32 version, then per tensor
//   u32 name_len, UTF-8 name, u32 ndim, u32 dims..., f32 little-endian payload
// until end of file. Round-trips are bit-exact; a version mismatch fails
// loudly instead of guessing.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

std::vector<NamedTensor> snapshot_params(const ParamStore<float>& store);
// every checkpoint record must land on a registered param and vice versa
void restore_params(ParamStore<float>& store, const std::vector<NamedTensor>& tensors,
                    const std::string& ignore_prefix = "meta.");

}  // namespace fpaint
