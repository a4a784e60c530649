#include <doctest.h>

#include <functional>

#include "seis/error.hpp"
#include "seis/nn/attention.hpp"
#include "seis/nn/autodiff.hpp"
#include "seis/rng.hpp"

using namespace seis;
using namespace seis::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  return Matrix::NullaryExpr(r, c, [&] { return standard_normal(rng); });
}

// Central differences of a scalar function of one input tensor against the tape gradient.
double max_grad_error(const Matrix& x0, const std::function<Var(Tape&, const Var&)>& f) {
  ParameterSet ps;
  ps.add("x", x0);
  Tape tape;
  const Var out = f(tape, tape.parameter(ps, 0));
  Gradients g = ps.zeros();
  tape.backward(out, g);
  auto eval = [&](const Matrix& x) {
    ParameterSet p2;
    p2.add("x", x);
    Tape t(false);
    return f(t, t.parameter(p2, 0)).scalar();
  };
  double worst = 0.0;
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Matrix xp = x0, xm = x0;
    xp(i) += h;
    xm(i) -= h;
    const double fd = (eval(xp) - eval(xm)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[0](i)) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace

TEST_CASE("attention special cases") {
  Matrix Q(1, 3), K(1, 3), V(1, 2);
  Q << 0.3, -1, 2;
  K << 1, 1, 1;
  V << 4, 5;
  CHECK(attention(Q, K, V).isApprox(V));

  Matrix K2 = Matrix::Zero(3, 3), V2(3, 2);
  V2 << 1, 2, 3, 4, 5, 6;
  const Matrix out = attention(Q, K2, V2);
  CHECK(out.isApprox(V2.colwise().mean()));
}

TEST_CASE("attention rows are distributions") {
  Rng rng(1);
  const Matrix Q = random_matrix(4, 8, rng), K = random_matrix(4, 8, rng);
  const Matrix w = attention_weights(Q, K);
  for (Eigen::Index r = 0; r < 4; ++r) CHECK(std::abs(w.row(r).sum() - 1.0) <= 1e-9);
  CHECK((w.array() >= 0).all());

  // Works for any floating scalar.
  const Eigen::MatrixXf wf = attention_weights(Q.cast<float>(), K.cast<float>());
  CHECK(wf.cast<double>().isApprox(w, 1e-5));

  BoolMatrix mask = BoolMatrix::Constant(4, 4, true);
  mask.col(2).setConstant(false);
  mask.row(3).setConstant(false);
  const Matrix wm = attention_weights(Q, K, &mask);
  CHECK((wm.col(2).array() == 0.0).all());
  CHECK((wm.row(3).array() == 0.0).all());
  CHECK(std::abs(wm.row(0).sum() - 1.0) <= 1e-12);

  CHECK_THROWS_AS(attention_weights(Q, random_matrix(4, 5, rng)), ConfigError);
}

TEST_CASE("multi-head attention") {
  Rng rng(2);
  const Matrix X = random_matrix(5, 4, rng);
  MultiHeadParams<double> one{{Matrix::Identity(4, 4)}, {Matrix::Identity(4, 4)}, {Matrix::Identity(4, 4)},
                              Matrix::Identity(4, 4)};
  CHECK(multi_head_attention(one, X, X, X).isApprox(attention(X, X, X)));

  MultiHeadParams<double> two;
  for (int h = 0; h < 2; ++h) {
    two.wq.push_back(random_matrix(4, 2, rng));
    two.wk.push_back(random_matrix(4, 2, rng));
    two.wv.push_back(random_matrix(4, 2, rng));
  }
  two.wo = random_matrix(4, 4, rng);
  BoolMatrix mask = BoolMatrix::Constant(5, 5, true);
  mask.col(1).setConstant(false);
  // A fully masked key has no influence on any head.
  Matrix X2 = X;
  X2.row(1) *= 100.0;
  const Matrix a = multi_head_attention(two, X, X, X, &mask);
  const Matrix b = multi_head_attention<double>(two, X, X2, X2, &mask);
  CHECK(a.isApprox(b));

  two.wo = random_matrix(3, 4, rng);
  CHECK_THROWS_AS(multi_head_attention(two, X, X, X), ConfigError);
}

TEST_CASE("tape gradients of the primitive ops") {
  Rng rng(3);
  const Matrix A = random_matrix(3, 4, rng), B = random_matrix(4, 2, rng), row = random_matrix(1, 4, rng);
  Mask mask = Mask::Constant(3, 4, true);
  mask(0, 1) = false;
  mask.row(2).setConstant(false);
  mask(2, 3) = true;

  CHECK(max_grad_error(A, [&](Tape& t, const Var& x) { return sum(square(matmul(x, t.constant(B)))); }) < 1e-6);
  CHECK(max_grad_error(A, [&](Tape& t, const Var& x) { return sum(matmul_nt(x, t.constant(A))); }) < 1e-6);
  CHECK(max_grad_error(A, [&](Tape&, const Var& x) { return sum(hadamard(gelu(x), tanh(x))); }) < 1e-6);
  CHECK(max_grad_error(A, [&](Tape& t, const Var& x) {
          return sum(square(layer_norm(x, t.constant(row), t.constant(row * 0.5))));
        }) < 1e-5);
  CHECK(max_grad_error(A, [&](Tape& t, const Var& x) {
          return sum(hadamard(masked_softmax_rows(x, mask), t.constant(A)));
        }) < 1e-6);
  CHECK(max_grad_error(A, [&](Tape&, const Var& x) { return element(masked_log_softmax(x, mask), 1, 2); }) < 1e-6);
  CHECK(max_grad_error(A, [&](Tape&, const Var& x) { return masked_entropy(x, mask); }) < 1e-6);
  CHECK(max_grad_error(A, [&](Tape&, const Var& x) {
          return sum(square(concat_cols({slice_cols(x, 1, 2), x})));
        }) < 1e-6);
  CHECK(max_grad_error(A, [&](Tape&, const Var& x) { return sum(square(masked_mean_rows(x, {true, false, true}))); }) <
        1e-6);
  CHECK(max_grad_error(row, [&](Tape& t, const Var& x) { return sum(square(add_row(t.constant(A), x))); }) < 1e-6);
  const Matrix lp = Matrix::Constant(1, 1, -0.7);
  CHECK(max_grad_error(lp, [&](Tape&, const Var& x) { return clipped_surrogate(x, -0.75, 1.3, 0.2); }) < 1e-6);
}

TEST_CASE("masked softmax semantics") {
  Matrix s(2, 3);
  s << 1, 2, 3, 4, 5, 6;
  Mask m = Mask::Constant(2, 3, true);
  m(0, 2) = false;
  m.row(1).setConstant(false);
  const Matrix p = masked_softmax(s, m);
  CHECK(p(0, 2) == 0.0);
  CHECK(p.row(1).isZero());
  CHECK(p.row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("gradient utilities") {
  Gradients g{Matrix::Constant(1, 2, 3.0), Matrix::Constant(1, 1, 4.0)};
  CHECK(global_norm(g) == doctest::Approx(std::sqrt(34.0)));
  scale(g, 0.5);
  add_into(g, g);
  CHECK(g[1](0, 0) == 4.0);
  ParameterSet ps;
  ps.add("w", Matrix::Zero(2, 3));
  CHECK(ps.index("w") == 0);
  CHECK(ps.scalar_count() == 6);
  CHECK_THROWS(ps.index("missing"));
}
