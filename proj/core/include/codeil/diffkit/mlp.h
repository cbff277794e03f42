#ifndef CODEIL_DIFFKIT_MLP_H_
#define CODEIL_DIFFKIT_MLP_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace codeil::diffkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Hidden-layer nonlinearity. The output layer is always affine.
enum class Activation : std::uint32_t { kElu = 0, kTanh = 1, kIdentity = 2 };

std::string ActivationName(Activation activation);
Activation ParseActivation(const std::string& name);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct MlpParams {
  std::vector<Layer> layers;
  Activation activation = Activation::kElu;

  int InputDim() const;
  int OutputDim() const;
  int NumParameters() const;

  // Throws InvalidArgument if adjacent layers do not chain or any entry is
  // non-finite.
  void Validate() const;

  bool operator==(const MlpParams& other) const;
};

// Builds a network with the given layer widths (input, hidden..., output).
// Weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
MlpParams MakeMlp(std::span<const int> widths, Activation activation,
                  std::mt19937_64& rng);

// All weights and biases set to zero.
MlpParams MakeZeroMlp(std::span<const int> widths, Activation activation);

// elu uses alpha = 1.
double ApplyActivation(Activation activation, double x);

Vector MlpForward(const MlpParams& params, const Vector& input);

// Column-batched forward pass: each column of `inputs` is one sample.
Matrix MlpForwardBatch(const MlpParams& params, const Matrix& inputs);

// Flat parameter layout used by the tape and the optimizer: for each layer,
// the weight in column-major order followed by the bias.
void AppendFlat(const MlpParams& params, Vector& flat, int& offset);
void AssignFlat(MlpParams& params, const Vector& flat, int& offset);

// Concatenates the flat layouts of several networks.
Vector Flatten(std::span<const MlpParams* const> nets);
void Unflatten(std::span<MlpParams* const> nets, const Vector& flat);
int TotalParameters(std::span<const MlpParams* const> nets);

}  // namespace codeil::diffkit

#endif  // CODEIL_DIFFKIT_MLP_H_
