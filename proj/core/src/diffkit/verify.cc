#include "codeil/diffkit/verify.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "codeil/error.h"

namespace codeil::diffkit {

double FiniteDiffCheck(const LossFn& loss, const Vector& params, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite difference step must be > 0");
  Vector analytic = Vector::Zero(params.size());
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) throw NumericError("loss is non-finite at params");
  if (analytic.size() != params.size()) {
    throw InvalidArgument("gradient length does not match parameters");
  }
  double worst = 0.0;
  Vector probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe(i) = params(i) + h;
    const double up = loss(probe, nullptr);
    probe(i) = params(i) - h;
    const double down = loss(probe, nullptr);
    probe(i) = params(i);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("loss is non-finite when perturbing entry " +
                         std::to_string(i));
    }
    const double central = (up - down) / (2.0 * h);
    const double err =
        std::abs(analytic(i) - central) / std::max(1.0, std::abs(central));
    worst = std::max(worst, err);
  }
  return worst;
}

double SpectralNorm(const Matrix& weight, double rel_tol, int max_iterations) {
  if (weight.size() == 0) return 0.0;
  if (weight.isZero(0.0)) return 0.0;
  const Matrix gram = weight.transpose() * weight;
  // Fixed start vector so the bound is reproducible.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vector v(gram.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = v.dot(w);
    const double residual = (w - lambda * v).norm();
    if (residual <= rel_tol * lambda) return std::sqrt(lambda);
    v = w / norm;
  }
  throw NumericError("power iteration did not converge after " +
                     std::to_string(max_iterations) + " iterations");
}

double SpectralBound(const MlpParams& params) {
  double beta = 1.0;
  for (const Layer& layer : params.layers) beta *= SpectralNorm(layer.weight);
  return beta;
}

}  // namespace codeil::diffkit
