#include "doctest.h"

#include <cmath>
#include <random>

#include "sepnet/tensor.hpp"

using namespace sepnet;

namespace {

// Oracle: j-i-k triple loop, accumulation order distinct from the library's.
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (int64_t j = 0; j < n; ++j)
    for (int64_t i = 0; i < m; ++i) {
      double acc = 0;
      for (int64_t p = 0; p < k; ++p) acc += double(a.at(i, p)) * double(b.at(p, j));
      out.at(i, j) = real(acc);
    }
  return out;
}

Tensor random_matrix(int64_t m, int64_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Tensor t({m, n});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = real(d(gen));
  return t;
}

Tensor identity(int64_t n) {
  Tensor t({n, n});
  for (int64_t i = 0; i < n; ++i) t.at(i, i) = 1;
  return t;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("construction enforces shape/data agreement") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.rank() == 2);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  Tensor s = Tensor::scalar(real(4.5));
  CHECK(s.rank() == 0);
  CHECK(s.numel() == 1);
  CHECK(s[0] == doctest::Approx(4.5));
}

TEST_CASE("matmul identity example") {
  // [[1,2]] * [[3],[4]] = [[11]]
  Tensor a({1, 2}, {1, 2});
  Tensor b({2, 1}, {3, 4});
  Tensor c = matmul(a, b);
  CHECK(c.dim(0) == 1);
  CHECK(c.dim(1) == 1);
  CHECK(c[0] == doctest::Approx(11.0));
}

TEST_CASE("matmul against naive triple loop") {
  Tensor a = random_matrix(7, 5, 11);
  Tensor b = random_matrix(5, 3, 22);
  Tensor got = matmul(a, b);
  Tensor want = naive_matmul(a, b);
  for (int64_t i = 0; i < got.numel(); ++i) {
    CHECK(std::abs(got[i] - want[i]) < 1e-14);
  }
}

TEST_CASE("matmul with identity is exact") {
  Tensor a = random_matrix(6, 6, 33);
  Tensor left = matmul(identity(6), a);
  Tensor right = matmul(a, identity(6));
  for (int64_t i = 0; i < a.numel(); ++i) {
    CHECK(left[i] == a[i]);
    CHECK(right[i] == a[i]);
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a({2, 3});
  Tensor b({4, 2});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x2]") != std::string::npos);
  }
}

TEST_CASE("matmul_nt and matmul_tn match transposed matmul") {
  Tensor a = random_matrix(4, 6, 44);
  Tensor b = random_matrix(5, 6, 55);
  Tensor bt({6, 5});
  for (int64_t i = 0; i < 5; ++i)
    for (int64_t j = 0; j < 6; ++j) bt.at(j, i) = b.at(i, j);
  Tensor want = naive_matmul(a, bt);  // a * b^T
  Tensor got = matmul_nt(a, b);
  for (int64_t i = 0; i < got.numel(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-14);

  Tensor c = random_matrix(6, 4, 66);
  Tensor ct({4, 6});
  for (int64_t i = 0; i < 6; ++i)
    for (int64_t j = 0; j < 4; ++j) ct.at(j, i) = c.at(i, j);
  Tensor want2 = naive_matmul(ct, bt);  // c^T * b^T, with bt as a plain [6x5] operand
  Tensor got2 = matmul_tn(c, bt);
  for (int64_t i = 0; i < got2.numel(); ++i) CHECK(std::abs(got2[i] - want2[i]) < 1e-14);
}

TEST_CASE("outer_product_chain basic examples") {
  // ([1,2],[3,4]) -> [[3,4],[6,8]]
  Tensor v1({2}, {1, 2});
  Tensor v2({2}, {3, 4});
  Tensor g = outer_product_chain({v1, v2});
  REQUIRE(g.shape() == std::vector<int64_t>{2, 2});
  CHECK(g[0] == doctest::Approx(3));
  CHECK(g[1] == doctest::Approx(4));
  CHECK(g[2] == doctest::Approx(6));
  CHECK(g[3] == doctest::Approx(8));

  // single vector passes through
  Tensor single = outer_product_chain({Tensor({2}, {5, 6})});
  CHECK(single.rank() == 1);
  CHECK(single[0] == doctest::Approx(5));
  CHECK(single[1] == doctest::Approx(6));
}

TEST_CASE("outer_product_chain against nested loop oracle") {
  Tensor a({3}, {0.5, -1.0, 2.0});
  Tensor b({2}, {4.0, 3.0});
  Tensor c({4}, {1.0, 2.0, -0.5, 8.0});
  Tensor g = outer_product_chain({a, b, c});
  REQUIRE(g.shape() == std::vector<int64_t>{3, 2, 4});
  for (int64_t i = 0; i < 3; ++i)
    for (int64_t j = 0; j < 2; ++j)
      for (int64_t k = 0; k < 4; ++k) {
        double want = double(a[i]) * double(b[j]) * double(c[k]);
        CHECK(g[(i * 2 + j) * 4 + k] == doctest::Approx(want));
      }
  // spot value quoted in the three-vector case: element (1,1,1) = -1*3*2 = -6
  CHECK(g[(1 * 2 + 1) * 4 + 1] == doctest::Approx(-6.0));
}

TEST_CASE("outer_product_chain is multilinear") {
  Tensor a({3}, {0.5, -1.0, 2.0});
  Tensor b({2}, {4.0, 3.0});
  Tensor base = outer_product_chain({a, b});
  Tensor scaled = outer_product_chain({scale(a, real(2.5)), b});
  for (int64_t i = 0; i < base.numel(); ++i) {
    CHECK(scaled[i] == doctest::Approx(2.5 * base[i]).epsilon(1e-12));
  }
}

TEST_CASE("outer_product_chain rejects bad input") {
  CHECK_THROWS_AS(outer_product_chain({}), ArgumentError);
  CHECK_THROWS_AS(outer_product_chain({Tensor({2, 2})}), DimensionError);
}

TEST_CASE("reduce_modes examples and linearity") {
  // stack of two 2x2 grids, coeffs [2,-1]
  Tensor stack({2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
  Tensor coeffs({2}, {2, -1});
  Tensor out = reduce_modes(stack, coeffs);
  REQUIRE(out.shape() == std::vector<int64_t>{2, 2});
  CHECK(out[0] == doctest::Approx(2 * 1 - 10));
  CHECK(out[1] == doctest::Approx(2 * 2 - 20));
  CHECK(out[2] == doctest::Approx(2 * 3 - 30));
  CHECK(out[3] == doctest::Approx(2 * 4 - 40));

  // zero coeffs annihilate
  Tensor zeroed = reduce_modes(stack, Tensor({2}));
  for (int64_t i = 0; i < zeroed.numel(); ++i) CHECK(zeroed[i] == 0);

  // linearity in coeffs
  Tensor c1({2}, {1.5, 0.25});
  Tensor c2({2}, {-0.5, 2.0});
  Tensor lhs = reduce_modes(stack, add(c1, c2));
  Tensor rhs = add(reduce_modes(stack, c1), reduce_modes(stack, c2));
  for (int64_t i = 0; i < lhs.numel(); ++i) {
    CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
  }
}

TEST_CASE("reduce_modes rejects mismatched coefficients") {
  Tensor stack({2, 3});
  CHECK_THROWS_AS(reduce_modes(stack, Tensor({3})), DimensionError);
  CHECK_THROWS_AS(reduce_modes(Tensor({4}), Tensor({4})), DimensionError);
}

TEST_CASE("elementwise ops and axpy") {
  Tensor a({3}, {1, 2, 3});
  Tensor b({3}, {10, 20, 30});
  CHECK(add(a, b)[2] == doctest::Approx(33));
  CHECK(sub(b, a)[0] == doctest::Approx(9));
  CHECK(mul(a, b)[1] == doctest::Approx(40));
  CHECK(scale(a, real(-2))[2] == doctest::Approx(-6));
  Tensor y = b;
  axpy_into(y, real(0.5), a);
  CHECK(y[1] == doctest::Approx(21));
  CHECK_THROWS_AS(add(a, Tensor({4})), DimensionError);
}

TEST_CASE("linspace endpoints are exact") {
  Tensor x = linspace(0, 1, 11);
  CHECK(x[0] == 0);
  CHECK(x[10] == 1);
  CHECK(x[5] == doctest::Approx(0.5));
  CHECK_THROWS_AS(linspace(0, 1, 1), ArgumentError);
}

TEST_CASE("memtrack peak grows with allocations") {
  memtrack::reset_peak();
  int64_t before = memtrack::peak_bytes();
  {
    Tensor big({1024, 64});
    CHECK(memtrack::peak_bytes() >= before + int64_t(1024 * 64 * sizeof(real)));
  }
  memtrack::reset_peak();
  CHECK(memtrack::peak_bytes() <= before + int64_t(1024 * 64 * sizeof(real)));
}

}  // TEST_SUITE
