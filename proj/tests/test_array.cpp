#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "softtree/array.hpp"
#include "softtree/error.hpp"
#include "softtree/rng.hpp"
#include "support/gradcheck.hpp"

using namespace softtree;

TEST_CASE("matvec identity and zeros") {
  const Array eye({2, 2}, {1, 0, 0, 1});
  const Array x({2}, {3, 4});
  const Array out = matvec(eye, x);
  CHECK(out[0] == 3.0);
  CHECK(out[1] == 4.0);

  const Array zeros({3, 4});
  const Array any({3}, {1.5, -2.0, 7.0});
  const Array z = matvec(zeros, any);
  for (std::size_t j = 0; j < 4; ++j) CHECK(z[j] == 0.0);
}

TEST_CASE("matvec hand dot product") {
  const Array w({2, 2}, {1, 2, 3, 4});
  const Array x({2}, {1, 1});
  const Array out = matvec(w, x);
  CHECK(out[0] == 4.0);
  CHECK(out[1] == 6.0);
}

TEST_CASE("matvec shape mismatch names both shapes") {
  const Array w({2, 3});
  const Array x({4});
  try {
    matvec(w, x);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2 x 3]") != std::string::npos);
    CHECK(msg.find("[4]") != std::string::npos);
  }
}

TEST_CASE("batched_matvec reduces to matvec at B=1 and duplicates rows") {
  Rng rng(5, 1);
  Array w({3, 2});
  for (double& v : w.values()) v = rng.normal();
  Array x({3});
  for (double& v : x.values()) v = rng.normal();

  Array X1({1, 3});
  for (std::size_t c = 0; c < 3; ++c) X1(0, c) = x[c];
  const Array single = matvec(w, x);
  const Array batched = batched_matvec(w, X1);
  for (std::size_t j = 0; j < 2; ++j) CHECK(batched(0, j) == single[j]);

  Array X2({2, 3});
  for (std::size_t c = 0; c < 3; ++c) X2(0, c) = X2(1, c) = x[c];
  const Array dup = batched_matvec(w, X2);
  for (std::size_t j = 0; j < 2; ++j) CHECK(dup(0, j) == dup(1, j));
}

TEST_CASE("batched_matvec equals per-row matvec bit for bit") {
  Rng rng(17, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t p = 1 + rng.next_u64() % 6;
    const std::size_t m = 1 + rng.next_u64() % 6;
    const std::size_t batch = 1 + rng.next_u64() % 5;
    Array w({p, m});
    for (double& v : w.values()) v = rng.normal();
    Array X({batch, p});
    for (double& v : X.values()) v = rng.normal();

    const Array out = batched_matvec(w, X);
    for (std::size_t b = 0; b < batch; ++b) {
      Array row({p});
      for (std::size_t c = 0; c < p; ++c) row[c] = X(b, c);
      const Array expect = matvec(w, row);
      for (std::size_t j = 0; j < m; ++j) CHECK(out(b, j) == expect[j]);
    }
  }
}

TEST_CASE("3x2 against loop oracle") {
  Rng rng(23, 3);
  Array w({2, 4});
  for (double& v : w.values()) v = rng.uniform(-2, 2);
  Array X({3, 2});
  for (double& v : X.values()) v = rng.uniform(-2, 2);
  const Array got = batched_matvec(w, X);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (std::size_t f = 0; f < 2; ++f) acc += w(f, j) * X(b, f);
      CHECK(got(b, j) == doctest::Approx(acc).epsilon(1e-15));
    }
  }
}

TEST_CASE("elementwise ops and reductions tolerate reordering") {
  Rng rng(31, 4);
  Array a({64});
  Array b({64});
  for (double& v : a.values()) v = rng.uniform(-1, 1);
  for (double& v : b.values()) v = rng.uniform(-1, 1);

  const Array ab = ew_mul(a, b);
  const Array ba = ew_mul(b, a);
  for (std::size_t i = 0; i < 64; ++i) CHECK(ab[i] == ba[i]);

  // Reassociated sums agree within 1e-12 relative.
  const double fwd = sum(a);
  double rev = 0.0;
  for (std::size_t i = 64; i-- > 0;) rev += a[i];
  CHECK(std::abs(fwd - rev) <= 1e-12 * std::max(1.0, std::abs(fwd)));

  const Array s = ew_add(a, b);
  const Array s2 = ew_add(b, a);
  for (std::size_t i = 0; i < 64; ++i) CHECK(s[i] == s2[i]);
}

TEST_CASE("sum_axis0 and axpy") {
  const Array a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Array s = sum_axis0(a);
  CHECK(s[0] == 5.0);
  CHECK(s[1] == 7.0);
  CHECK(s[2] == 9.0);

  Array y({3}, {1, 1, 1});
  const Array x({3}, {2, 0, -2});
  axpy(0.5, x, y);
  CHECK(y[0] == 2.0);
  CHECK(y[1] == 1.0);
  CHECK(y[2] == 0.0);
}

TEST_CASE("construction validates value count") {
  CHECK_THROWS_AS(Array({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("finite-difference checker sanity") {
  // 0.5 ||theta||^2 has gradient theta.
  const Array theta({2}, {1.0, 2.0});
  const Array grad = testsupport::finite_diff_grad(
      [](const Array& t) { return 0.5 * dot(t, t); }, theta);
  CHECK(std::abs(grad[0] - 1.0) < 1e-8);
  CHECK(std::abs(grad[1] - 2.0) < 1e-8);

  const Array flat = testsupport::finite_diff_grad([](const Array&) { return 3.5; }, theta);
  CHECK(flat[0] == 0.0);
  CHECK(flat[1] == 0.0);
}
