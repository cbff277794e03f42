#include "codeil/diffkit/mlp.h"

#include <cmath>

#include "codeil/error.h"

namespace codeil::diffkit {

std::string ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kElu:
      return "elu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

Activation ParseActivation(const std::string& name) {
  if (name == "elu") return Activation::kElu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw InvalidArgument("unknown activation '" + name + "'");
}

int MlpParams::InputDim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

int MlpParams::OutputDim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

int MlpParams::NumParameters() const {
  int n = 0;
  for (const Layer& layer : layers) {
    n += static_cast<int>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

void MlpParams::Validate() const {
  if (layers.empty()) throw InvalidArgument("network has no layers");
  for (size_t k = 0; k < layers.size(); ++k) {
    const Layer& layer = layers[k];
    if (layer.bias.size() != layer.weight.rows()) {
      throw InvalidArgument("layer " + std::to_string(k) + ": bias length " +
                            std::to_string(layer.bias.size()) +
                            " != weight rows " +
                            std::to_string(layer.weight.rows()));
    }
    if (k > 0 && layer.weight.cols() != layers[k - 1].weight.rows()) {
      throw InvalidArgument("layer " + std::to_string(k) + ": input width " +
                            std::to_string(layer.weight.cols()) +
                            " != previous output width " +
                            std::to_string(layers[k - 1].weight.rows()));
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw InvalidArgument("layer " + std::to_string(k) +
                            ": non-finite parameter");
    }
  }
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (activation != other.activation || layers.size() != other.layers.size()) {
    return false;
  }
  for (size_t k = 0; k < layers.size(); ++k) {
    const Layer& a = layers[k];
    const Layer& b = other.layers[k];
    if (a.weight.rows() != b.weight.rows() ||
        a.weight.cols() != b.weight.cols() || a.weight != b.weight ||
        a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

MlpParams MakeMlp(std::span<const int> widths, Activation activation,
                  std::mt19937_64& rng) {
  if (widths.size() < 2) throw InvalidArgument("need at least two widths");
  MlpParams params;
  params.activation = activation;
  for (size_t k = 0; k + 1 < widths.size(); ++k) {
    const int in = widths[k];
    const int out = widths[k + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer{Matrix(out, in), Vector::Zero(out)};
    for (int j = 0; j < in; ++j) {
      for (int i = 0; i < out; ++i) layer.weight(i, j) = dist(rng);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

MlpParams MakeZeroMlp(std::span<const int> widths, Activation activation) {
  if (widths.size() < 2) throw InvalidArgument("need at least two widths");
  MlpParams params;
  params.activation = activation;
  for (size_t k = 0; k + 1 < widths.size(); ++k) {
    params.layers.push_back(
        {Matrix::Zero(widths[k + 1], widths[k]), Vector::Zero(widths[k + 1])});
  }
  return params;
}

double ApplyActivation(Activation activation, double x) {
  switch (activation) {
    case Activation::kElu:
      return x > 0.0 ? x : std::expm1(x);
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

namespace {

void CheckInput(const MlpParams& params, Eigen::Index rows) {
  if (params.layers.empty()) throw InvalidArgument("network has no layers");
  if (rows != params.layers.front().weight.cols()) {
    throw InvalidArgument("layer 0: input length " + std::to_string(rows) +
                          " != expected " +
                          std::to_string(params.layers.front().weight.cols()));
  }
}

}  // namespace

Vector MlpForward(const MlpParams& params, const Vector& input) {
  CheckInput(params, input.size());
  Vector x = input;
  for (size_t k = 0; k < params.layers.size(); ++k) {
    const Layer& layer = params.layers[k];
    Vector z = layer.weight * x + layer.bias;
    if (k + 1 < params.layers.size()) {
      z = z.unaryExpr(
          [&](double v) { return ApplyActivation(params.activation, v); });
    }
    x = std::move(z);
  }
  return x;
}

Matrix MlpForwardBatch(const MlpParams& params, const Matrix& inputs) {
  CheckInput(params, inputs.rows());
  Matrix x = inputs;
  for (size_t k = 0; k < params.layers.size(); ++k) {
    const Layer& layer = params.layers[k];
    Matrix z = layer.weight * x;
    z.colwise() += layer.bias;
    if (k + 1 < params.layers.size()) {
      z = z.unaryExpr(
          [&](double v) { return ApplyActivation(params.activation, v); });
    }
    x = std::move(z);
  }
  return x;
}

void AppendFlat(const MlpParams& params, Vector& flat, int& offset) {
  for (const Layer& layer : params.layers) {
    const int nw = static_cast<int>(layer.weight.size());
    flat.segment(offset, nw) =
        Eigen::Map<const Vector>(layer.weight.data(), nw);
    offset += nw;
    const int nb = static_cast<int>(layer.bias.size());
    flat.segment(offset, nb) = layer.bias;
    offset += nb;
  }
}

void AssignFlat(MlpParams& params, const Vector& flat, int& offset) {
  for (Layer& layer : params.layers) {
    const int nw = static_cast<int>(layer.weight.size());
    Eigen::Map<Vector>(layer.weight.data(), nw) = flat.segment(offset, nw);
    offset += nw;
    const int nb = static_cast<int>(layer.bias.size());
    layer.bias = flat.segment(offset, nb);
    offset += nb;
  }
}

int TotalParameters(std::span<const MlpParams* const> nets) {
  int n = 0;
  for (const MlpParams* net : nets) n += net->NumParameters();
  return n;
}

Vector Flatten(std::span<const MlpParams* const> nets) {
  Vector flat(TotalParameters(nets));
  int offset = 0;
  for (const MlpParams* net : nets) AppendFlat(*net, flat, offset);
  return flat;
}

void Unflatten(std::span<MlpParams* const> nets, const Vector& flat) {
  int offset = 0;
  for (MlpParams* net : nets) AssignFlat(*net, flat, offset);
  if (offset != flat.size()) {
    throw InvalidArgument("flat parameter vector has " +
                          std::to_string(flat.size()) + " entries, expected " +
                          std::to_string(offset));
  }
}

}  // namespace codeil::diffkit
