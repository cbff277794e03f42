#include <cmath>
#include <random>
#include <vector>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "codeil/diffkit/adam.h"
#include "codeil/diffkit/checkpoint.h"
#include "codeil/diffkit/mlp.h"
#include "codeil/diffkit/tape.h"
#include "codeil/diffkit/verify.h"
#include "codeil/error.h"

namespace codeil::diffkit {
namespace {

Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Wraps a tape-building function of a single parameter matrix into a LossFn.
LossFn MatrixLoss(int rows, int cols, std::function<Var(Tape&, Var)> body) {
  return [=](const Vector& flat, Vector* grad) {
    Tape tape(static_cast<int>(flat.size()));
    Matrix x = Eigen::Map<const Matrix>(flat.data(), rows, cols);
    Var root = body(tape, tape.Parameter(x, 0));
    if (grad) *grad = tape.Backward(root);
    return root.value()(0, 0);
  };
}

Vector Flat(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

TEST(TapeTest, ElementwiseOpsPassGradientCheck) {
  std::mt19937_64 rng(1);
  const Matrix x0 = RandomMatrix(3, 4, rng);
  const Matrix row = RandomMatrix(1, 4, rng);
  const Matrix bias = RandomMatrix(3, 1, rng);
  auto loss = MatrixLoss(3, 4, [&](Tape& t, Var x) {
    Var a = Mul(Sin(x), Cos(Scale(x, 0.7)));
    Var b = Add(Tanh(x), Elu(AddScalar(x, -0.2)));
    Var c = Sub(Square(a), SmoothAbs(b, 1e-2));
    Var d = AddBias(MulRow(c, t.Constant(row)), t.Constant(bias));
    Var rows_part = Rows(d, 1, 2);
    Var cols_part = Cols(d, 2, 2);
    const Var stack[] = {rows_part, Scale(rows_part, 2.0)};
    const Var side[] = {cols_part, cols_part};
    return Add(Sum(ConcatRows(stack)), SumSquares(ConcatCols(side)));
  });
  EXPECT_LT(FiniteDiffCheck(loss, Flat(x0), 1e-6), 1e-7);
}

TEST(TapeTest, MatMulGradient) {
  std::mt19937_64 rng(2);
  const Matrix b = RandomMatrix(4, 2, rng);
  auto loss = MatrixLoss(3, 4, [&](Tape& t, Var x) {
    return SumSquares(MatMul(x, t.Constant(b)));
  });
  EXPECT_LT(FiniteDiffCheck(loss, Flat(RandomMatrix(3, 4, rng)), 1e-6), 1e-7);
}

TEST(TapeTest, ConstantOnlyGraphHasZeroGradient) {
  Tape tape(3);
  Var c = tape.Constant(Matrix::Ones(2, 2));
  const Vector g = tape.Backward(Sum(c));
  EXPECT_EQ(g.size(), 3);
  EXPECT_TRUE(g.isZero(0.0));
}

TEST(TapeTest, BackwardRejectsNonScalarRoot) {
  Tape tape(0);
  Var c = tape.Constant(Matrix::Ones(2, 1));
  EXPECT_THROW(tape.Backward(c), Error);
}

TEST(TapeTest, ShapeMismatchIsAnError) {
  Tape tape(0);
  EXPECT_THROW(Add(tape.Constant(Matrix::Ones(2, 1)),
                   tape.Constant(Matrix::Ones(3, 1))),
               Error);
}

TEST(TapeTest, BatchedMatMulMatchesEigenForAllTransposes) {
  std::mt19937_64 rng(3);
  const int m = 2, k = 3, n = 4, batch = 3;
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      Matrix a = RandomMatrix(m * k, batch, rng);
      Matrix b = RandomMatrix(k * n, batch, rng);
      Tape tape(0);
      Var out = BatchedMatMul(tape.Constant(a), tape.Constant(b), m, k, n, ta,
                              tb);
      ASSERT_EQ(out.rows(), m * n);
      for (int j = 0; j < batch; ++j) {
        using RowMajor =
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Matrix am = Eigen::Map<const RowMajor>(a.col(j).data(), ta ? k : m,
                                               ta ? m : k);
        Matrix bm = Eigen::Map<const RowMajor>(b.col(j).data(), tb ? n : k,
                                               tb ? k : n);
        if (ta) am.transposeInPlace();
        if (tb) bm.transposeInPlace();
        const RowMajor expected = am * bm;
        for (int r = 0; r < m * n; ++r) {
          EXPECT_NEAR(out.value()(r, j), expected.data()[r], 1e-12);
        }
      }
      auto loss = MatrixLoss(m * k, batch, [&](Tape& t, Var x) {
        return SumSquares(BatchedMatMul(x, t.Constant(b), m, k, n, ta, tb));
      });
      EXPECT_LT(FiniteDiffCheck(loss, Flat(a), 1e-6), 1e-7);
    }
  }
}

TEST(TapeTest, PinvSolveMatchesDenseSolveAndGradient) {
  std::mt19937_64 rng(4);
  const int n = 3, batch = 2;
  Matrix a(n * n, batch);
  for (int j = 0; j < batch; ++j) {
    Matrix r = RandomMatrix(n, n, rng);
    Matrix spd = r * r.transpose() + Matrix::Identity(n, n);
    for (int i = 0; i < n * n; ++i) a(i, j) = spd(i / n, i % n);
  }
  const Matrix b = RandomMatrix(n, batch, rng);
  Tape tape(0);
  Var x = PinvSolve(tape.Constant(a), tape.Constant(b), n, 1e-10);
  for (int j = 0; j < batch; ++j) {
    Matrix spd(n, n);
    for (int i = 0; i < n * n; ++i) spd(i / n, i % n) = a(i, j);
    const Vector expected = spd.ldlt().solve(b.col(j));
    EXPECT_LT((x.value().col(j) - expected).norm(), 1e-12);
  }
  // Gradient through both A (kept symmetric) and b.
  auto loss = MatrixLoss(n * n + n, batch, [&](Tape& t, Var p) {
    Var raw = Rows(p, 0, n * n);
    Var sym = Add(raw, BatchedMatMul(t.Constant(Matrix::Identity(n, n)
                                                     .reshaped(n * n, 1)
                                                     .replicate(1, batch)),
                                     raw, n, n, n, false, true));
    Var spd = Add(sym, t.Constant(a));
    return SumSquares(PinvSolve(spd, Rows(p, n * n, n), n, 1e-10));
  });
  Matrix p0(n * n + n, batch);
  p0.topRows(n * n) = 0.1 * RandomMatrix(n * n, batch, rng);
  p0.bottomRows(n) = b;
  EXPECT_LT(FiniteDiffCheck(loss, Flat(p0), 1e-6), 1e-6);
}

TEST(TapeTest, PinvSolveOnRankDeficientMatrixUsesPseudoInverse) {
  Matrix a = Matrix::Zero(4, 1);
  a(0, 0) = 2.0;  // diag(2, 0)
  Matrix b(2, 1);
  b << 4.0, 5.0;
  Tape tape(0);
  Var x = PinvSolve(tape.Constant(a), tape.Constant(b), 2, 1e-10);
  EXPECT_DOUBLE_EQ(x.value()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(x.value()(1, 0), 0.0);
}

TEST(TapeTest, LowerTriangularGradient) {
  std::mt19937_64 rng(5);
  const int n = 3;
  auto loss = MatrixLoss(6, 2, [&](Tape&, Var raw) {
    Var l = LowerTriangular(raw, n, 1e-5);
    return SumSquares(BatchedMatMul(l, l, n, n, n, false, true));
  });
  EXPECT_LT(FiniteDiffCheck(loss, Flat(RandomMatrix(6, 2, rng)), 1e-6), 1e-6);
}

TEST(MlpTest, TapeMatchesDirectEvaluation) {
  std::mt19937_64 rng(6);
  for (Activation act :
       {Activation::kElu, Activation::kTanh, Activation::kIdentity}) {
    const std::vector<int> widths{3, 5, 4, 2};
    MlpParams net = MakeMlp(widths, act, rng);
    for (Layer& layer : net.layers) layer.bias = Vector::Random(layer.bias.size());
    const Matrix in = RandomMatrix(3, 6, rng);
    Tape tape(net.NumParameters());
    Var out = TapeMlp(tape, net, 0, tape.Constant(in));
    const Matrix direct = MlpForwardBatch(net, in);
    EXPECT_LT((out.value() - direct).cwiseAbs().maxCoeff(), 1e-14);
    for (int j = 0; j < 6; ++j) {
      EXPECT_LT((MlpForward(net, in.col(j)) - direct.col(j)).norm(), 1e-14);
    }
  }
}

TEST(MlpTest, ParameterGradientPassesCheck) {
  std::mt19937_64 rng(7);
  const std::vector<int> widths{4, 6, 3};
  MlpParams net = MakeMlp(widths, Activation::kElu, rng);
  const Matrix in = RandomMatrix(4, 5, rng);
  const Matrix target = RandomMatrix(3, 5, rng);
  LossFn loss = [&](const Vector& flat, Vector* grad) {
    MlpParams p = net;
    std::vector<MlpParams*> nets{&p};
    Unflatten(nets, flat);
    Tape tape(static_cast<int>(flat.size()));
    Var r = Sub(TapeMlp(tape, p, 0, tape.Constant(in)), tape.Constant(target));
    Var root = SumSquares(r);
    if (grad) *grad = tape.Backward(root);
    return root.value()(0, 0);
  };
  const std::vector<const MlpParams*> view{&net};
  EXPECT_LT(FiniteDiffCheck(loss, Flatten(view), 1e-6), 1e-7);
}

TEST(MlpTest, FlattenRoundTripAndLayout) {
  std::mt19937_64 rng(8);
  const std::vector<int> widths{2, 3, 1};
  MlpParams a = MakeMlp(widths, Activation::kTanh, rng);
  MlpParams b = MakeMlp(widths, Activation::kTanh, rng);
  std::vector<const MlpParams*> view{&a, &b};
  const Vector flat = Flatten(view);
  EXPECT_EQ(flat.size(), 2 * (2 * 3 + 3 + 3 * 1 + 1));
  EXPECT_EQ(flat(0), a.layers[0].weight(0, 0));
  EXPECT_EQ(flat(1), a.layers[0].weight(1, 0));
  MlpParams c = MakeZeroMlp(widths, Activation::kTanh);
  MlpParams d = MakeZeroMlp(widths, Activation::kTanh);
  std::vector<MlpParams*> mut{&c, &d};
  Unflatten(mut, flat);
  EXPECT_EQ(c, a);
  EXPECT_EQ(d, b);
  EXPECT_THROW(Unflatten(mut, Vector::Zero(3)), Error);
}

TEST(MlpTest, WrongInputSizeNamesLayer) {
  std::mt19937_64 rng(9);
  const std::vector<int> widths{2, 3};
  MlpParams net = MakeMlp(widths, Activation::kElu, rng);
  try {
    MlpForward(net, Vector::Zero(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
}

TEST(VerifyTest, FiniteDiffCheckDetectsWrongGradient) {
  LossFn bad = [](const Vector& p, Vector* g) {
    if (g) *g = 3.0 * p;  // true gradient is 2p
    return p.squaredNorm();
  };
  EXPECT_GT(FiniteDiffCheck(bad, Vector::Ones(3), 1e-6), 0.4);
  EXPECT_THROW(FiniteDiffCheck(bad, Vector::Ones(3), 0.0), Error);
}

TEST(VerifyTest, SpectralNormMatchesSvd) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix w = RandomMatrix(5 + trial % 3, 4 + trial % 5, rng);
    Eigen::JacobiSVD<Matrix> svd(w);
    EXPECT_NEAR(SpectralNorm(w), svd.singularValues()(0),
                1e-8 * svd.singularValues()(0));
  }
  EXPECT_EQ(SpectralNorm(Matrix::Zero(3, 3)), 0.0);
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 3.0;
  diag(1, 1) = -4.0;
  EXPECT_NEAR(SpectralNorm(diag), 4.0, 1e-9);
}

TEST(VerifyTest, SpectralBoundIsProductOfLayerNorms) {
  std::mt19937_64 rng(11);
  const std::vector<int> widths{3, 4, 2};
  MlpParams net = MakeMlp(widths, Activation::kElu, rng);
  double expected = 1.0;
  for (const Layer& l : net.layers) {
    expected *= Eigen::JacobiSVD<Matrix>(l.weight).singularValues()(0);
  }
  EXPECT_NEAR(SpectralBound(net), expected, 1e-8 * expected);
}

TEST(AdamTest, FirstStepMovesByLearningRateTimesSign) {
  Vector p(3);
  p << 1.0, -2.0, 0.5;
  Vector g(3);
  g << 0.3, -4.0, 1e-3;
  AdamState state;
  Vector before = p;
  AdamStep(p, g, state, 0.01, 0.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(before(i) - p(i), 0.01 * g(i) / (std::abs(g(i)) + 1e-8), 1e-9);
  }
  EXPECT_EQ(state.step, 1);
}

TEST(AdamTest, DecoupledDecayShrinksWithZeroGradient) {
  Vector p = Vector::Constant(2, 2.0);
  AdamState state;
  AdamStep(p, Vector::Zero(2), state, 0.1, 0.5);
  EXPECT_NEAR(p(0), 2.0 * (1.0 - 0.05), 1e-15);
}

TEST(AdamTest, NonFiniteGradientNamesIndex) {
  Vector p = Vector::Zero(3);
  Vector g = Vector::Zero(3);
  g(2) = std::nan("");
  AdamState state;
  try {
    AdamStep(p, g, state, 0.1, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(AdamTest, MinimizesQuadratic) {
  Vector p = Vector::Constant(4, 3.0);
  AdamState state;
  for (int i = 0; i < 3000; ++i) AdamStep(p, 2.0 * p, state, 0.01, 0.0);
  EXPECT_LT(p.norm(), 1e-3);
}

TEST(CheckpointTest, RoundTripIsBitwise) {
  std::mt19937_64 rng(12);
  const std::vector<int> widths{3, 4, 2};
  Checkpoint ck{"{\"class\":\"test\"}",
                {MakeMlp(widths, Activation::kElu, rng),
                 MakeMlp(widths, Activation::kTanh, rng)}};
  const std::string bytes = EncodeCheckpoint(ck);
  const Checkpoint back = DecodeCheckpoint(bytes);
  EXPECT_EQ(back.manifest, ck.manifest);
  ASSERT_EQ(back.nets.size(), 2u);
  EXPECT_EQ(back.nets[0], ck.nets[0]);
  EXPECT_EQ(back.nets[1], ck.nets[1]);
  EXPECT_EQ(EncodeCheckpoint(back), bytes);
}

TEST(CheckpointTest, CorruptionAndTruncationAreDataErrors) {
  std::mt19937_64 rng(13);
  const std::vector<int> widths{2, 2};
  const std::string bytes =
      EncodeCheckpoint(Checkpoint{"{}", {MakeMlp(widths, Activation::kElu, rng)}});
  std::string flipped = bytes;
  flipped[20] ^= 0x40;
  for (const std::string& bad :
       {flipped, bytes.substr(0, bytes.size() - 3), std::string("xx")}) {
    try {
      DecodeCheckpoint(bad);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kData);
    }
  }
}

}  // namespace
}  // namespace codeil::diffkit
