#ifndef CODEIL_DIFFKIT_VERIFY_H_
#define CODEIL_DIFFKIT_VERIFY_H_

#include <functional>

#include "codeil/diffkit/mlp.h"

namespace codeil::diffkit {

// Loss evaluated at a flat parameter vector. When `grad` is non-null the
// analytic gradient must be written to it.
using LossFn = std::function<double(const Vector& params, Vector* grad)>;

// Max over entries of |g_analytic - g_central| / max(1, |g_central|), with
// central differences of step h. The loss must be smooth at `params`;
// kinks (e.g. |p| at 0) make the result meaningless.
double FiniteDiffCheck(const LossFn& loss, const Vector& params, double h);

// Largest singular value by power iteration on W^T W.
double SpectralNorm(const Matrix& weight, double rel_tol = 1e-10,
                    int max_iterations = 200000);

// Product of layer spectral norms: an upper bound on the l2 Lipschitz
// constant when the activation is 1-Lipschitz (elu, tanh, identity).
double SpectralBound(const MlpParams& params);

}  // namespace codeil::diffkit

#endif  // CODEIL_DIFFKIT_VERIFY_H_
