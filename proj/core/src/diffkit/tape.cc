#include "codeil/diffkit/tape.h"

#include <cmath>
#include <memory>

#include "codeil/error.h"

namespace codeil::diffkit {

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::Constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, size() - 1);
}

Var Tape::Parameter(const Matrix& value, int offset) {
  if (offset < 0 || offset + value.size() > num_parameters_) {
    throw InvalidArgument("parameter block [" + std::to_string(offset) + ", " +
                          std::to_string(offset + value.size()) +
                          ") outside flat vector of " +
                          std::to_string(num_parameters_));
  }
  Node node;
  node.value = value;
  node.requires_grad = true;
  node.param_offset = offset;
  nodes_.push_back(std::move(node));
  return Var(this, size() - 1);
}

Var Tape::Parameter(const Vector& value, int offset) {
  return Parameter(Matrix(value), offset);
}

Var Tape::Push(Matrix value, std::vector<int> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (int id : inputs) {
    if (nodes_[id].requires_grad) node.requires_grad = true;
  }
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, size() - 1);
}

Tape::Node& Tape::EnsureGrad(int id) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    node.has_grad = true;
  }
  return node;
}

Vector Tape::Backward(Var root) {
  if (root.tape() != this) throw InvalidArgument("root belongs to another tape");
  const Matrix& root_value = value(root.id());
  if (root_value.rows() != 1 || root_value.cols() != 1) {
    throw InvalidArgument("backward needs a scalar root, got " +
                          std::to_string(root_value.rows()) + "x" +
                          std::to_string(root_value.cols()));
  }
  Vector flat = Vector::Zero(num_parameters_);
  if (!nodes_[root.id()].requires_grad) return flat;
  EnsureGrad(root.id()).grad(0, 0) = 1.0;
  for (int id = root.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.requires_grad) continue;
    if (node.param_offset >= 0) {
      flat.segment(node.param_offset, node.grad.size()) +=
          Eigen::Map<const Vector>(node.grad.data(), node.grad.size());
    } else if (node.backward) {
      node.backward(*this, id);
    }
  }
  return flat;
}

namespace {

void CheckSameShape(Var a, Var b, const char* op) {
  if (a.tape() != b.tape()) {
    throw InvalidArgument(std::string(op) + ": operands on different tapes");
  }
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

// Unary elementwise op with derivative expressed through input x and output y.
template <typename F, typename DF>
Var Elementwise(Var a, F f, DF df) {
  Tape& tape = *a.tape();
  Matrix y = a.value().unaryExpr(f);
  return tape.Push(std::move(y), {a.id()}, [df](Tape& t, int self) {
    const int in = t.input(self, 0);
    const Matrix& x = t.value(in);
    const Matrix& y = t.value(self);
    Matrix d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      d.data()[i] = df(x.data()[i], y.data()[i]);
    }
    t.Accumulate(in, t.grad(self).cwiseProduct(d));
  });
}

}  // namespace

Var Add(Var a, Var b) {
  CheckSameShape(a, b, "Add");
  return a.tape()->Push(a.value() + b.value(), {a.id(), b.id()},
                        [](Tape& t, int self) {
                          t.Accumulate(t.input(self, 0), t.grad(self));
                          t.Accumulate(t.input(self, 1), t.grad(self));
                        });
}

Var Sub(Var a, Var b) {
  CheckSameShape(a, b, "Sub");
  return a.tape()->Push(a.value() - b.value(), {a.id(), b.id()},
                        [](Tape& t, int self) {
                          t.Accumulate(t.input(self, 0), t.grad(self));
                          t.Accumulate(t.input(self, 1), -t.grad(self));
                        });
}

Var Mul(Var a, Var b) {
  CheckSameShape(a, b, "Mul");
  return a.tape()->Push(
      a.value().cwiseProduct(b.value()), {a.id(), b.id()},
      [](Tape& t, int self) {
        const int ia = t.input(self, 0);
        const int ib = t.input(self, 1);
        t.Accumulate(ia, t.grad(self).cwiseProduct(t.value(ib)));
        t.Accumulate(ib, t.grad(self).cwiseProduct(t.value(ia)));
      });
}

Var Scale(Var a, double factor) {
  return a.tape()->Push(a.value() * factor, {a.id()},
                        [factor](Tape& t, int self) {
                          t.Accumulate(t.input(self, 0),
                                       t.grad(self) * factor);
                        });
}

Var AddScalar(Var a, double offset) {
  return a.tape()->Push(a.value().array() + offset, {a.id()},
                        [](Tape& t, int self) {
                          t.Accumulate(t.input(self, 0), t.grad(self));
                        });
}

Var Sin(Var a) {
  return Elementwise(
      a, [](double x) { return std::sin(x); },
      [](double x, double) { return std::cos(x); });
}

Var Cos(Var a) {
  return Elementwise(
      a, [](double x) { return std::cos(x); },
      [](double x, double) { return -std::sin(x); });
}

Var Square(Var a) {
  return Elementwise(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var Tanh(Var a) {
  return Elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Elu(Var a) {
  return Elementwise(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Var Activate(Var a, Activation activation) {
  switch (activation) {
    case Activation::kElu:
      return Elu(a);
    case Activation::kTanh:
      return Tanh(a);
    case Activation::kIdentity:
      return a;
  }
  return a;
}

Var SmoothAbs(Var a, double c) {
  return Elementwise(
      a, [c](double x) { return std::sqrt(x * x + c * c) - c; },
      [c](double x, double y) { return x / (y + c); });
}

Var MulRow(Var x, Var row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw InvalidArgument("MulRow: row must be 1x" + std::to_string(x.cols()));
  }
  Matrix y = x.value().array().rowwise() * row.value().row(0).array();
  return x.tape()->Push(std::move(y), {x.id(), row.id()},
                        [](Tape& t, int self) {
                          const int ix = t.input(self, 0);
                          const int ir = t.input(self, 1);
                          const Matrix& g = t.grad(self);
                          if (t.requires_grad(ix)) {
                            Matrix gx = g.array().rowwise() *
                                        t.value(ir).row(0).array();
                            t.Accumulate(ix, gx);
                          }
                          if (t.requires_grad(ir)) {
                            t.Accumulate(ir, g.cwiseProduct(t.value(ix))
                                                 .colwise()
                                                 .sum());
                          }
                        });
}

Var AddBias(Var x, Var bias) {
  if (bias.cols() != 1 || bias.rows() != x.rows()) {
    throw InvalidArgument("AddBias: bias must be " + std::to_string(x.rows()) +
                          "x1");
  }
  Matrix y = x.value();
  y.colwise() += bias.value().col(0);
  return x.tape()->Push(std::move(y), {x.id(), bias.id()},
                        [](Tape& t, int self) {
                          t.Accumulate(t.input(self, 0), t.grad(self));
                          t.Accumulate(t.input(self, 1),
                                       t.grad(self).rowwise().sum());
                        });
}

Var MatMul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("MatMul: inner dimensions " +
                          std::to_string(a.cols()) + " and " +
                          std::to_string(b.rows()));
  }
  return a.tape()->Push(
      a.value() * b.value(), {a.id(), b.id()}, [](Tape& t, int self) {
        const int ia = t.input(self, 0);
        const int ib = t.input(self, 1);
        const Matrix& g = t.grad(self);
        if (t.requires_grad(ia)) t.Accumulate(ia, g * t.value(ib).transpose());
        if (t.requires_grad(ib)) t.Accumulate(ib, t.value(ia).transpose() * g);
      });
}

Var Rows(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw InvalidArgument("Rows: range out of bounds");
  }
  return a.tape()->Push(a.value().middleRows(start, count), {a.id()},
                        [start, count](Tape& t, int self) {
                          const int in = t.input(self, 0);
                          Matrix g = Matrix::Zero(t.value(in).rows(),
                                                  t.value(in).cols());
                          g.middleRows(start, count) = t.grad(self);
                          t.Accumulate(in, g);
                        });
}

Var Cols(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw InvalidArgument("Cols: range out of bounds");
  }
  return a.tape()->Push(a.value().middleCols(start, count), {a.id()},
                        [start, count](Tape& t, int self) {
                          const int in = t.input(self, 0);
                          Matrix g = Matrix::Zero(t.value(in).rows(),
                                                  t.value(in).cols());
                          g.middleCols(start, count) = t.grad(self);
                          t.Accumulate(in, g);
                        });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("ConcatRows: no parts");
  Tape& tape = *parts[0].tape();
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw InvalidArgument("ConcatRows: column mismatch");
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix y(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    y.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return tape.Push(std::move(y), std::move(ids), [](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Eigen::Index r = 0;
    for (int k = 0;; ++k) {
      if (r >= g.rows()) break;
      const int in = t.input(self, k);
      const Eigen::Index n = t.value(in).rows();
      t.Accumulate(in, g.middleRows(r, n));
      r += n;
    }
  });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("ConcatCols: no parts");
  Tape& tape = *parts[0].tape();
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw InvalidArgument("ConcatCols: row mismatch");
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix y(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    y.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return tape.Push(std::move(y), std::move(ids), [](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Eigen::Index c = 0;
    for (int k = 0;; ++k) {
      if (c >= g.cols()) break;
      const int in = t.input(self, k);
      const Eigen::Index n = t.value(in).cols();
      t.Accumulate(in, g.middleCols(c, n));
      c += n;
    }
  });
}

Var Sum(Var a) {
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return a.tape()->Push(std::move(y), {a.id()}, [](Tape& t, int self) {
    const int in = t.input(self, 0);
    t.Accumulate(in, Matrix::Constant(t.value(in).rows(), t.value(in).cols(),
                                      t.grad(self)(0, 0)));
  });
}

Var SumSquares(Var a) {
  Matrix y(1, 1);
  y(0, 0) = a.value().squaredNorm();
  return a.tape()->Push(std::move(y), {a.id()}, [](Tape& t, int self) {
    const int in = t.input(self, 0);
    t.Accumulate(in, (2.0 * t.grad(self)(0, 0)) * t.value(in));
  });
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>;

Eigen::Map<const RowMajor> ColumnAsMatrix(const Matrix& m, Eigen::Index col,
                                          int rows, int cols) {
  return Eigen::Map<const RowMajor>(m.col(col).data(), rows, cols);
}

Eigen::Map<RowMajor> ColumnAsMatrix(Matrix& m, Eigen::Index col, int rows,
                                    int cols) {
  return Eigen::Map<RowMajor>(m.col(col).data(), rows, cols);
}

}  // namespace

Var BatchedMatMul(Var a, Var b, int m, int k, int n, bool trans_a,
                  bool trans_b) {
  if (a.rows() != m * k || b.rows() != k * n || a.cols() != b.cols()) {
    throw InvalidArgument("BatchedMatMul: operand shapes do not match " +
                          std::to_string(m) + "x" + std::to_string(k) + "x" +
                          std::to_string(n));
  }
  const Eigen::Index batch = a.cols();
  const int ar = trans_a ? k : m, ac = trans_a ? m : k;
  const int br = trans_b ? n : k, bc = trans_b ? k : n;
  Matrix y(m * n, batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    auto am = ColumnAsMatrix(a.value(), j, ar, ac);
    auto bm = ColumnAsMatrix(b.value(), j, br, bc);
    auto ym = ColumnAsMatrix(y, j, m, n);
    if (trans_a && trans_b) {
      ym.noalias() = am.transpose() * bm.transpose();
    } else if (trans_a) {
      ym.noalias() = am.transpose() * bm;
    } else if (trans_b) {
      ym.noalias() = am * bm.transpose();
    } else {
      ym.noalias() = am * bm;
    }
  }
  return a.tape()->Push(
      std::move(y), {a.id(), b.id()},
      [m, n, ar, ac, br, bc, trans_a, trans_b](Tape& t, int self) {
        const int ia = t.input(self, 0);
        const int ib = t.input(self, 1);
        const Matrix& g = t.grad(self);
        const Matrix& av = t.value(ia);
        const Matrix& bv = t.value(ib);
        const Eigen::Index batch = g.cols();
        // With Y = op(A) op(B): dop(A) = G op(B)^T, dop(B) = op(A)^T G.
        if (t.requires_grad(ia)) {
          Matrix ga(av.rows(), batch);
          for (Eigen::Index j = 0; j < batch; ++j) {
            auto gm = ColumnAsMatrix(g, j, m, n);
            auto bm = ColumnAsMatrix(bv, j, br, bc);
            RowMajor opb = trans_b ? RowMajor(bm.transpose()) : RowMajor(bm);
            RowMajor dopa = gm * opb.transpose();
            auto out = ColumnAsMatrix(ga, j, ar, ac);
            if (trans_a) {
              out = dopa.transpose();
            } else {
              out = dopa;
            }
          }
          t.Accumulate(ia, ga);
        }
        if (t.requires_grad(ib)) {
          Matrix gb(bv.rows(), batch);
          for (Eigen::Index j = 0; j < batch; ++j) {
            auto gm = ColumnAsMatrix(g, j, m, n);
            auto am = ColumnAsMatrix(av, j, ar, ac);
            RowMajor opa = trans_a ? RowMajor(am.transpose()) : RowMajor(am);
            RowMajor dopb = opa.transpose() * gm;
            auto out = ColumnAsMatrix(gb, j, br, bc);
            if (trans_b) {
              out = dopb.transpose();
            } else {
              out = dopb;
            }
          }
          t.Accumulate(ib, gb);
        }
      });
}

Var PinvSolve(Var a, Var b, int n, double rel_cutoff) {
  if (a.rows() != n * n || b.rows() != n || a.cols() != b.cols()) {
    throw InvalidArgument("PinvSolve: expected " + std::to_string(n * n) +
                          " and " + std::to_string(n) + " rows");
  }
  const Eigen::Index batch = a.cols();
  auto pinvs = std::make_shared<std::vector<Matrix>>(batch);
  Matrix x(n, batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    Matrix am = ColumnAsMatrix(a.value(), j, n, n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(am);
    const Vector& lambda = eig.eigenvalues();
    const double top = lambda.cwiseAbs().maxCoeff();
    Vector inv = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (top > 0.0 && lambda(i) > rel_cutoff * top) inv(i) = 1.0 / lambda(i);
    }
    (*pinvs)[j] = eig.eigenvectors() * inv.asDiagonal() *
                  eig.eigenvectors().transpose();
    x.col(j) = (*pinvs)[j] * b.value().col(j);
  }
  return a.tape()->Push(
      std::move(x), {a.id(), b.id()}, [n, pinvs](Tape& t, int self) {
        const int ia = t.input(self, 0);
        const int ib = t.input(self, 1);
        const Matrix& g = t.grad(self);
        const Matrix& av = t.value(ia);
        const Matrix& bv = t.value(ib);
        const Matrix& xv = t.value(self);
        const Eigen::Index batch = g.cols();
        Matrix ga(n * n, batch);
        Matrix gb(n, batch);
        const Matrix eye = Matrix::Identity(n, n);
        for (Eigen::Index j = 0; j < batch; ++j) {
          const Matrix& p = (*pinvs)[j];
          Matrix am = ColumnAsMatrix(av, j, n, n);
          const Vector gx = g.col(j);
          const Vector pg = p * gx;
          const Matrix residual_proj = eye - am * p;
          RowMajor da = -pg * xv.col(j).transpose() +
                        (p * pg) * (residual_proj * bv.col(j)).transpose() +
                        (residual_proj * gx) * (p * xv.col(j)).transpose();
          ColumnAsMatrix(ga, j, n, n) = da;
          gb.col(j) = pg;
        }
        t.Accumulate(ia, ga);
        t.Accumulate(ib, gb);
      });
}

Var LowerTriangular(Var raw, int n, double diag_offset) {
  const int entries = n * (n + 1) / 2;
  if (raw.rows() != entries) {
    throw InvalidArgument("LowerTriangular: expected " +
                          std::to_string(entries) + " rows, got " +
                          std::to_string(raw.rows()));
  }
  const Eigen::Index batch = raw.cols();
  const double c = kDiagonalSmoothing;
  Matrix y = Matrix::Zero(n * n, batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (int r = 0; r < n; ++r) {
      for (int s = 0; s <= r; ++s) {
        const double z = raw.value()(r * (r + 1) / 2 + s, j);
        y(r * n + s, j) =
            r == s ? std::sqrt(z * z + c * c) - c + diag_offset : z;
      }
    }
  }
  return raw.tape()->Push(std::move(y), {raw.id()}, [n, c](Tape& t, int self) {
    const int in = t.input(self, 0);
    const Matrix& z = t.value(in);
    const Matrix& g = t.grad(self);
    Matrix gz(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      for (int r = 0; r < n; ++r) {
        for (int s = 0; s <= r; ++s) {
          const int k = r * (r + 1) / 2 + s;
          const double d =
              r == s ? z(k, j) / std::sqrt(z(k, j) * z(k, j) + c * c) : 1.0;
          gz(k, j) = g(r * n + s, j) * d;
        }
      }
    }
    t.Accumulate(in, gz);
  });
}

Var TapeMlp(Tape& tape, const MlpParams& params, int offset, Var input) {
  if (params.layers.empty()) throw InvalidArgument("network has no layers");
  if (input.rows() != params.InputDim()) {
    throw InvalidArgument("layer 0: input length " +
                          std::to_string(input.rows()) + " != expected " +
                          std::to_string(params.InputDim()));
  }
  Var x = input;
  for (size_t k = 0; k < params.layers.size(); ++k) {
    const Layer& layer = params.layers[k];
    Var w = tape.Parameter(layer.weight, offset);
    offset += static_cast<int>(layer.weight.size());
    Var b = tape.Parameter(layer.bias, offset);
    offset += static_cast<int>(layer.bias.size());
    x = AddBias(MatMul(w, x), b);
    if (k + 1 < params.layers.size()) x = Activate(x, params.activation);
  }
  return x;
}

}  // namespace codeil::diffkit
