#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <limits>

#include "hystdyn/error.hpp"
#include "hystdyn/kernels.hpp"
#include "hystdyn/numerics.hpp"

using namespace hystdyn;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

Vector random_vector(Rng& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("identity times x is x") {
  const Vector x = {1.5, -2.0, 0.25};
  CHECK(matvec(Matrix::identity(3), x) == x);
}

TEST_CASE("hadamard and add") {
  CHECK(hadamard(Vector{1, 2}, Vector{3, 4}) == Vector{3, 8});
  CHECK(add(Vector{1, 2}, Vector{3, 4}) == Vector{4, 6});
  CHECK(dot(Vector{1, 2}, Vector{3, 4}) == 11.0);
}

TEST_CASE("matvec agrees with a double loop") {
  Rng rng(17);
  const Matrix m = random_matrix(rng, 5, 4);
  const Vector x = random_vector(rng, 4);
  const Vector y = matvec(m, x);
  for (std::size_t r = 0; r < 5; ++r) {
    long double acc = 0.0L;
    for (std::size_t c = 0; c < 4; ++c) acc += static_cast<long double>(m(r, c)) * x[c];
    CHECK(y[r] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-14));
  }
}

TEST_CASE("matvec distributes over addition") {
  Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_matrix(rng, 7, 6);
    const Vector a = random_vector(rng, 6);
    const Vector b = random_vector(rng, 6);
    const Vector lhs = matvec(m, add(a, b));
    const Vector rhs = add(matvec(m, a), matvec(m, b));
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-12);
  }
}

TEST_CASE("dimension mismatches throw") {
  CHECK_THROWS_AS(matvec(Matrix(2, 3), Vector(2)), DimensionError);
  CHECK_THROWS_AS(add(Vector(2), Vector(3)), DimensionError);
  CHECK_THROWS_AS(hadamard(Vector(2), Vector(3)), DimensionError);
  CHECK_THROWS_AS(dot(Vector(1), Vector(3)), DimensionError);
  CHECK_THROWS_AS(Matrix(2, 2, Vector(3)), DimensionError);
}

TEST_CASE("activations") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(tanh_act(0.0) == 0.0);
  CHECK(relu(-3.2) == 0.0);
  CHECK(relu(2.5) == 2.5);
  CHECK(sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  CHECK(tanh_act(-0.7) == doctest::Approx(std::tanh(-0.7)).epsilon(1e-15));
}

TEST_CASE("activations stay inside open ranges at saturation") {
  for (double x : {-1e6, -800.0, -40.0, 40.0, 800.0, 1e6, std::numeric_limits<double>::max()}) {
    CHECK(sigmoid(x) > 0.0);
    CHECK(sigmoid(x) < 1.0);
    CHECK(tanh_act(x) > -1.0);
    CHECK(tanh_act(x) < 1.0);
  }
  Vector v = {-1000.0, 0.0, 1000.0};
  sigmoid_inplace(v);
  CHECK(v[1] == 0.5);
  CHECK((v[0] > 0.0 && v[2] < 1.0));
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng d(42), e(43);
  CHECK(d.next_u64() != e.next_u64());
  // The generator is the standard-mandated mt19937_64: its 10000th output for
  // the default seed is fixed by the C++ standard.
  Rng s(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = s.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("rng distributions") {
  Rng rng(9);
  double sum = 0.0, sq = 0.0;
  constexpr int kN = 200000;
  for (int i = 0; i < kN; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY((u >= 0.0 && u < 1.0));
    sum += u;
  }
  CHECK(sum / kN == doctest::Approx(0.5).epsilon(0.01));
  sum = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / kN) < 0.01);
  CHECK(sq / kN == doctest::Approx(1.0).epsilon(0.02));
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[rng.index(7)];
  for (int h : hits) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> a(50), b;
  for (int i = 0; i < 50; ++i) a[i] = i;
  b = a;
  Rng r1(3), r2(3);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("glorot bounds and statistics") {
  CHECK(glorot_bound(300, 5) == doctest::Approx(std::sqrt(6.0 / 305.0)));
  CHECK(glorot_bound(300, 5) == doctest::Approx(0.1402).epsilon(1e-3));
  Rng a(1), b(1);
  CHECK(glorot_uniform(a, 300, 5) == glorot_uniform(b, 300, 5));

  Rng rng(77);
  const Matrix big = glorot_uniform(rng, 400, 250);  // 10^5 draws
  const double bound = glorot_bound(400, 250);
  double sum = 0.0;
  for (double v : big.values()) {
    CHECK_UNARY(std::abs(v) <= bound);
    sum += v;
  }
  CHECK(std::abs(sum / 1e5) < 0.01);
  CHECK_THROWS(glorot_uniform(rng, 0, 3));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(123);
  for (std::size_t n : {1u, 3u, 64u, 300u, 517u}) {
    CAPTURE(n);
    const Matrix m = random_matrix(rng, n, n + 9);
    const Vector x = random_vector(rng, n + 9);
    const Vector xt = random_vector(rng, n);

    Vector y1(n), y2(n);
    kernels::gemv(m, x, y1);
    kernels::reference::gemv(m, x, y2);
    CHECK(y1 == y2);

    Vector a1 = random_vector(rng, n), a2 = a1;
    kernels::gemv_acc(m, x, a1);
    kernels::reference::gemv_acc(m, x, a2);
    CHECK(a1 == a2);

    Vector t1 = random_vector(rng, n + 9), t2 = t1;
    kernels::gemv_t_acc(m, xt, t1);
    kernels::reference::gemv_t_acc(m, xt, t2);
    CHECK(t1 == t2);

    Matrix g1 = m, g2 = m;
    kernels::ger(xt, x, g1);
    kernels::reference::ger(xt, x, g2);
    CHECK(g1 == g2);
  }
}

TEST_CASE("kernels match plain linear algebra") {
  Rng rng(5);
  const Matrix m = random_matrix(rng, 6, 4);
  const Vector x = random_vector(rng, 4);
  Vector y(6);
  kernels::gemv(m, x, y);
  const Vector expect = matvec(m, x);
  for (std::size_t i = 0; i < 6; ++i) CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-14));

  const Vector r = random_vector(rng, 6);
  Vector t(4, 0.0);
  kernels::gemv_t_acc(m, r, t);
  for (std::size_t c = 0; c < 4; ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 6; ++k) acc += m(k, c) * r[k];
    CHECK(t[c] == doctest::Approx(acc).epsilon(1e-14));
  }
  CHECK_THROWS_AS(kernels::gemv(m, Vector(3), y), DimensionError);
}
