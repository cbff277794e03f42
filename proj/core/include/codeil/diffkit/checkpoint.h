#ifndef CODEIL_DIFFKIT_CHECKPOINT_H_
#define CODEIL_DIFFKIT_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "codeil/diffkit/mlp.h"

namespace codeil::diffkit {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Parameter container: an opaque manifest (JSON text written by the owner)
// and a list of networks. Layout, all little-endian:
//   "CODEILCK" | u32 version | u32 len, manifest | u32 net count |
//   per net: u32 activation, u32 layers, per layer: u32 out, u32 in,
//            f64[out*in] weight (row-major), f64[out] bias |
//   u64 FNV-1a of all preceding bytes
struct Checkpoint {
  std::string manifest;
  std::vector<MlpParams> nets;
};

std::string EncodeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DecodeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace codeil::diffkit

#endif  // CODEIL_DIFFKIT_CHECKPOINT_H_
