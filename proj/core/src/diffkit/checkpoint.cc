#include "codeil/diffkit/checkpoint.h"

#include "codeil/binary_io.h"
#include "codeil/error.h"

namespace codeil::diffkit {
namespace {

constexpr std::string_view kMagic = "CODEILCK";

}  // namespace

std::string EncodeCheckpoint(const Checkpoint& checkpoint) {
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(kCheckpointVersion);
  w.String(checkpoint.manifest);
  w.U32(static_cast<std::uint32_t>(checkpoint.nets.size()));
  for (const MlpParams& net : checkpoint.nets) {
    net.Validate();
    w.U32(static_cast<std::uint32_t>(net.activation));
    w.U32(static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& layer : net.layers) {
      w.U32(static_cast<std::uint32_t>(layer.weight.rows()));
      w.U32(static_cast<std::uint32_t>(layer.weight.cols()));
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
          w.F64(layer.weight(i, j));
        }
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) w.F64(layer.bias(i));
    }
  }
  return w.Finish();
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  ByteReader r = ByteReader::Open(bytes, "checkpoint");
  if (r.Bytes(kMagic.size()) != kMagic) {
    throw DataError("checkpoint: bad magic");
  }
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint out;
  out.manifest = r.String();
  const std::uint32_t nets = r.U32();
  for (std::uint32_t n = 0; n < nets; ++n) {
    MlpParams net;
    const std::uint32_t act = r.U32();
    if (act > static_cast<std::uint32_t>(Activation::kIdentity)) {
      throw DataError("checkpoint: unknown activation tag " +
                      std::to_string(act));
    }
    net.activation = static_cast<Activation>(act);
    const std::uint32_t layers = r.U32();
    for (std::uint32_t k = 0; k < layers; ++k) {
      const std::uint32_t rows = r.U32();
      const std::uint32_t cols = r.U32();
      if (static_cast<std::uint64_t>(rows) * cols * 8 > r.remaining()) {
        throw DataError("checkpoint: layer shape exceeds file size");
      }
      Layer layer{Matrix(rows, cols), Vector(rows)};
      for (std::uint32_t i = 0; i < rows; ++i) {
        for (std::uint32_t j = 0; j < cols; ++j) layer.weight(i, j) = r.F64();
      }
      for (std::uint32_t i = 0; i < rows; ++i) layer.bias(i) = r.F64();
      net.layers.push_back(std::move(layer));
    }
    try {
      net.Validate();
    } catch (const Error& e) {
      throw DataError(std::string("checkpoint: ") + e.what());
    }
    out.nets.push_back(std::move(net));
  }
  r.ExpectEnd();
  return out;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  WriteFile(path, EncodeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  return DecodeCheckpoint(ReadFile(path));
}

}  // namespace codeil::diffkit
