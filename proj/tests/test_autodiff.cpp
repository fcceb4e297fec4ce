#include "doctest.h"
#include "fd.hpp"

#include "modbal/autodiff.hpp"

using namespace modbal;

TEST_SUITE("autodiff") {

TEST_CASE("matmul values") {
  Matrix m(3, 3);
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  CHECK(ad::matmul(ad::constant(Matrix::Identity(3, 3)), ad::constant(m))->value == m);
  Matrix a(1, 1), b(1, 1);
  a << 2;
  b << 3;
  CHECK(ad::matmul(ad::constant(a), ad::constant(b))->value(0, 0) == 6.0);
  CHECK_THROWS_AS(ad::matmul(ad::constant(Matrix::Zero(2, 3)), ad::constant(Matrix::Zero(2, 3))), DimensionError);
}

TEST_CASE("matmul gradient of sum") {
  Rng rng(11);
  const Matrix a = fd::random(rng, 4, 3), b = fd::random(rng, 3, 2);
  CHECK(fd::relative_error([&](const ad::Var& x) { return ad::sum(ad::matmul(x, ad::constant(b))); }, a) < 1e-4);
  CHECK(fd::relative_error([&](const ad::Var& x) { return ad::sum(ad::matmul(ad::constant(a), x)); }, b) < 1e-4);
}

TEST_CASE("spmm matches dense product") {
  Rng rng(12);
  Matrix a = fd::random(rng, 5, 5);
  a(1, 2) = a(3, 0) = 0.0;
  const Matrix x = fd::random(rng, 5, 3);
  auto sp = std::make_shared<const SparseMatrix>(a.sparseView());
  CHECK((ad::spmm(sp, ad::constant(x))->value - a * x).cwiseAbs().maxCoeff() < 1e-14);
  const Matrix w = fd::random(rng, 5, 3);
  CHECK(fd::relative_error([&](const ad::Var& v) { return ad::sum(ad::hadamard(ad::spmm(sp, v), ad::constant(w))); },
                           x) < 1e-4);
}

TEST_CASE("relu") {
  Matrix v(1, 3);
  v << -1, 0, 2;
  Matrix want(1, 3);
  want << 0, 0, 2;
  CHECK(ad::relu(ad::constant(v))->value == want);
  CHECK(ad::relu(ad::constant(Matrix::Constant(2, 2, -3.0)))->value.isZero());

  Rng rng(13);
  const Matrix p = fd::away_from_zero(rng, 3, 4, 1e-3);
  const Matrix w = fd::random(rng, 3, 4);
  CHECK(fd::relative_error([&](const ad::Var& x) { return ad::sum(ad::hadamard(ad::relu(x), ad::constant(w))); }, p) <
        1e-4);
}

TEST_CASE("relu subgradient at zero is zero") {
  auto x = ad::parameter(Matrix::Zero(1, 1));
  ad::backward(ad::sum(ad::relu(x)));
  CHECK(x->grad(0, 0) == 0.0);
}

TEST_CASE("row_softmax") {
  auto s = ad::row_softmax(ad::constant(Matrix::Zero(1, 4)));
  for (int j = 0; j < 4; ++j) CHECK(s->value(0, j) == doctest::Approx(0.25).epsilon(1e-15));
  Matrix big(1, 2);
  big << 1000, 0;
  auto t = ad::row_softmax(ad::constant(big));
  CHECK(all_finite(t->value));
  CHECK(t->value(0, 0) == doctest::Approx(1.0));
  CHECK(t->value(0, 1) < 1e-300);

  Rng rng(14);
  const Matrix p = fd::random(rng, 3, 4), w = fd::random(rng, 3, 4);
  CHECK(fd::relative_error([&](const ad::Var& x) { return ad::sum(ad::hadamard(ad::row_softmax(x), ad::constant(w))); },
                           p) < 1e-4);
  CHECK(fd::relative_error(
            [&](const ad::Var& x) { return ad::sum(ad::hadamard(ad::row_log_softmax(x), ad::constant(w))); }, p) < 1e-4);
}

TEST_CASE("backward basics") {
  auto x = ad::parameter(Matrix::Constant(2, 3, 0.7));
  ad::backward(ad::sum(x));
  CHECK(x->grad == Matrix::Ones(2, 3));

  auto y = ad::parameter(Matrix::Constant(2, 2, 5.0));
  ad::backward(ad::sum(ad::scale(y, 0.0)));
  CHECK(y->grad.isZero());
}

TEST_CASE("backward is repeatable") {
  Rng rng(15);
  auto x = ad::parameter(fd::random(rng, 3, 3));
  auto root = ad::sum(ad::hadamard(x, x));
  ad::backward(root);
  const Matrix first = x->grad;
  ad::backward(root);
  CHECK(x->grad == first);
}

TEST_CASE("composed chain") {
  Rng rng(16);
  const Matrix w1 = fd::random(rng, 4, 5), w2 = fd::random(rng, 5, 3);
  const Labels labels{0, 2, 1, 1, 0, 2};
  const std::vector<int> idx{0, 2, 1, 1, 0, 2};
  const Matrix x = fd::random(rng, 6, 4);
  auto f = [&](const ad::Var& v) {
    auto h = ad::relu(ad::matmul(v, ad::constant(w1)));
    auto logp = ad::row_log_softmax(ad::matmul(h, ad::constant(w2)));
    return ad::scale(ad::mean(ad::pick(logp, idx)), -1.0);
  };
  CHECK(fd::relative_error(f, x) < 1e-4);
}

TEST_CASE("structural ops") {
  Rng rng(17);
  const Matrix p = fd::random(rng, 4, 3), w = fd::random(rng, 2, 3), side = fd::random(rng, 4, 2);
  const Matrix wide = fd::random(rng, 4, 9);
  CHECK(fd::relative_error(
            [&](const ad::Var& x) { return ad::sum(ad::hadamard(ad::select_rows(x, {3, 1}), ad::constant(w))); }, p) <
        1e-4);
  CHECK(fd::relative_error(
            [&](const ad::Var& x) {
              auto joined = ad::concat_cols({x, ad::constant(side), ad::append_ones(x)});
              return ad::sum(ad::hadamard(joined, ad::constant(wide)));
            },
            p) < 1e-4);
  CHECK(ad::append_ones(ad::constant(p))->value.col(3) == Matrix::Ones(4, 1));
}

TEST_CASE("clamp_min passes gradient only above the floor") {
  Matrix v(1, 2);
  v << -1.0, 2.0;
  auto x = ad::parameter(v);
  ad::backward(ad::sum(ad::clamp_min(x, 0.5)));
  CHECK(x->grad(0, 0) == 0.0);
  CHECK(x->grad(0, 1) == 1.0);
}

TEST_CASE("gradient_check") {
  Rng rng(18);
  Matrix q = fd::random(rng, 3, 3);
  q = q * q.transpose();
  const Matrix p = fd::random(rng, 3, 1);
  // x^T Q x
  auto quad = [&](const ad::Var& x) { return ad::sum(ad::hadamard(x, ad::matmul(ad::constant(q), x))); };
  CHECK(ad::gradient_check(quad, p, 1e-5) < 1e-6);
  const Matrix c = fd::random(rng, 3, 1);
  auto lin = [&](const ad::Var& x) { return ad::sum(ad::hadamard(x, ad::constant(c))); };
  CHECK(ad::gradient_check(lin, p, 1e-5) < 1e-9);
}

}
