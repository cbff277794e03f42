#ifndef CODEIL_DIFFKIT_TAPE_H_
#define CODEIL_DIFFKIT_TAPE_H_

#include <functional>
#include <span>
#include <vector>

#include "codeil/diffkit/mlp.h"

namespace codeil::diffkit {

class Tape;

// Handle to a node on a Tape. Values are matrices; batched quantities keep
// one sample per column.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records a single scalar-valued evaluation for reverse-mode differentiation.
// Parameter leaves map onto a flat gradient vector of `num_parameters`
// entries. A tape is single-use and must not be shared between threads.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(int num_parameters = 0) : num_parameters_(num_parameters) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  // Leaf whose gradient lands in the flat vector at [offset, offset + size)
  // in column-major order.
  Var Parameter(const Matrix& value, int offset);
  Var Parameter(const Vector& value, int offset);

  // Reverse sweep from a 1x1 root. Unused parameters get zero gradient.
  Vector Backward(Var root);

  // Internal interface used by the operations below.
  Var Push(Matrix value, std::vector<int> inputs, BackwardFn backward);
  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  int input(int id, int k) const { return nodes_[id].inputs[k]; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Adds `contribution` to the gradient of node `id` if it requires one.
  template <typename Derived>
  void Accumulate(int id, const Eigen::MatrixBase<Derived>& contribution);

  int num_parameters() const { return num_parameters_; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    int param_offset = -1;
    std::vector<int> inputs;
    BackwardFn backward;
  };

  Node& EnsureGrad(int id);

  int num_parameters_;
  std::vector<Node> nodes_;
};

template <typename Derived>
void Tape::Accumulate(int id, const Eigen::MatrixBase<Derived>& contribution) {
  if (!nodes_[id].requires_grad) return;
  Node& node = EnsureGrad(id);
  node.grad += contribution;
}

// Elementwise and shape operations.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double factor);
Var AddScalar(Var a, double offset);
Var Sin(Var a);
Var Cos(Var a);
Var Square(Var a);
Var Tanh(Var a);
Var Elu(Var a);
Var Activate(Var a, Activation activation);
// sqrt(a^2 + c^2) - c, a smooth stand-in for |a| that vanishes at zero.
Var SmoothAbs(Var a, double c);

// x: r x B, row: 1 x B. Scales every row of x by `row` elementwise.
Var MulRow(Var x, Var row);
// x: r x B, bias: r x 1, broadcast over columns.
Var AddBias(Var x, Var bias);
Var MatMul(Var a, Var b);

Var Rows(Var a, int start, int count);
Var Cols(Var a, int start, int count);
Var ConcatRows(std::span<const Var> parts);
Var ConcatCols(std::span<const Var> parts);

Var Sum(Var a);
Var SumSquares(Var a);

// Per-column small matrix product. Column j of `a` holds an m x k matrix
// (or k x m when trans_a) flattened row-major; likewise `b` holds k x n
// (or n x k when trans_b). Output column j holds the m x n product.
Var BatchedMatMul(Var a, Var b, int m, int k, int n, bool trans_a = false,
                  bool trans_b = false);

// Per-column x = pinv(A) b for symmetric PSD A (n x n row-major per column).
// Eigenvalues below rel_cutoff * max eigenvalue are treated as zero. The
// backward pass differentiates the pseudo-inverse at locally constant rank.
Var PinvSolve(Var a, Var b, int n, double rel_cutoff);

// Builds row-major n x n lower-triangular factors from n(n+1)/2 raw entries
// per column (row-major order of the lower triangle). Diagonal entries pass
// through SmoothAbs and get `diag_offset` added.
Var LowerTriangular(Var raw, int n, double diag_offset);

// Records an MLP evaluation whose parameters sit at `offset` in the flat
// layout (see AppendFlat).
Var TapeMlp(Tape& tape, const MlpParams& params, int offset, Var input);

// Width of the smoothing used for Cholesky-factor diagonals.
inline constexpr double kDiagonalSmoothing = 1e-3;

}  // namespace codeil::diffkit

#endif  // CODEIL_DIFFKIT_TAPE_H_
