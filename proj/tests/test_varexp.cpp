#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "varwass/error.hpp"
#include "varwass/varexp.hpp"

using namespace varwass;

namespace {

ExponentField exps(std::vector<double> v) {
  return ExponentField(CellField(std::move(v)));
}

DensityField masses(std::vector<double> v) {
  return DensityField(CellField(std::move(v)));
}

// Root of the modular equation by plain Newton iteration in log(lambda).
double modular_root(const CellField& u, const DensityField& rho,
                    const ExponentField& p, const Grid& g) {
  double log_lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    double m = 0.0;
    double dm = 0.0;  // d m / d log(lambda)
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u[i] == 0.0) continue;
      const double term =
          std::pow(std::abs(u[i]) / std::exp(log_lambda), p[i]) * rho.mass(i);
      m += term;
      dm -= p[i] * term;
    }
    const double step = std::log(m) * m / dm;
    log_lambda -= step;
    if (std::abs(step) < 1e-15) break;
  }
  (void)g;
  return std::exp(log_lambda);
}

}  // namespace

TEST_CASE("conjugate exponent") {
  const ExponentField q2 = conjugate(ExponentField::constant(3, 2.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(q2[i] == 2.0);
  const ExponentField q3 = conjugate(ExponentField::constant(3, 3.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(q3[i] == doctest::Approx(1.5).epsilon(1e-15));
  const ExponentField q = conjugate(exps({1.5, 4.0}));
  CHECK(q[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(q.p_minus() == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(q.p_plus() == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("conjugation is an involution") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ExponentField p = testutil::random_exponent(rng, 12, 1.05, 8.0);
    const ExponentField qq = conjugate(conjugate(p));
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(std::abs(qq[i] - p[i]) <= 1e-14 * p[i]);
    }
    const ExponentField q = conjugate(p);
    CHECK(q.p_minus() == doctest::Approx(p.p_plus() / (p.p_plus() - 1.0)).epsilon(1e-14));
    CHECK(q.p_plus() == doctest::Approx(p.p_minus() / (p.p_minus() - 1.0)).epsilon(1e-14));
  }
}

TEST_CASE("exponents at or below one are rejected") {
  for (double bad : {1.0, 0.5, -2.0, double(NAN), double(INFINITY)}) {
    try {
      exps({2.0, bad});
      FAIL("expected exponent_out_of_range");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::exponent_out_of_range);
    }
  }
}

TEST_CASE("density fields validate their mass") {
  CHECK_THROWS_AS(masses({0.5, 0.6}), Error);
  CHECK_THROWS_AS(masses({1.2, -0.2}), Error);
  CHECK_NOTHROW(masses({1.0, 0.0}));
  const Grid g = make_grid(0.0, 2.0, 4);
  const DensityField u = DensityField::uniform(g);
  CHECK(u.density(2, g) == doctest::Approx(0.5));
  const DensityField r = DensityField::from_density({1.0, 3.0, 0.0, 0.0}, g);
  CHECK(r.mass(1) == doctest::Approx(0.75));
  CHECK(r.max_density(g) == doctest::Approx(1.5));
}

TEST_CASE("modular by direct summation") {
  const Grid g = make_grid(0.0, 1.0, 2);
  const DensityField half = masses({0.5, 0.5});
  const ExponentField p = exps({2.0, 4.0});
  CHECK(modular(CellField(2, 1.0), half, p, 1.0, g) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(modular(CellField(2, 0.0), half, p, 1.0, g) == 0.0);
  const CellField u(std::vector<double>{0.0, 2.0});
  // 0.5 * 0 + |2|^4 * rho_1 * dx with rho_1 = 1, dx = 0.5
  double expected = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    expected += std::pow(std::abs(u[i]), p[i]) * (half.mass(i) / g.dx()) * g.dx();
  }
  CHECK(expected == 8.0);
  CHECK(modular(u, half, p, 1.0, g) == doctest::Approx(expected).epsilon(1e-15));

  try {
    modular(u, half, p, 0.0, g);
    FAIL("expected nonpositive_lambda");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::nonpositive_lambda);
  }
}

TEST_CASE("Luxemburg norm closed forms") {
  const Grid g = make_grid(0.0, 1.0, 2);
  const DensityField half = masses({0.5, 0.5});
  CHECK(luxemburg_norm(CellField(2, 3.0), half, exps({2.0, 4.0}), g) ==
        doctest::Approx(3.0).epsilon(1e-12));
  const CellField u(std::vector<double>{0.0, 2.0});
  CHECK(luxemburg_norm(u, half, ExponentField::constant(2, 2.0), g) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  const double lambda = luxemburg_norm(u, half, exps({2.0, 4.0}), g);
  CHECK(lambda == doctest::Approx(modular_root(u, half, exps({2.0, 4.0}), g)).epsilon(1e-12));
  CHECK(lambda == doctest::Approx(1.681793).epsilon(1e-6));
  CHECK(luxemburg_norm(CellField(2, 0.0), half, exps({2.0, 4.0}), g) == 0.0);
}

TEST_CASE("norm ignores cells without mass") {
  const Grid g = make_grid(0.0, 1.0, 3);
  const DensityField rho = masses({0.5, 0.0, 0.5});
  const ExponentField p = exps({2.0, 3.0, 2.5});
  const CellField a(std::vector<double>{1.0, 0.0, -2.0});
  const CellField b(std::vector<double>{1.0, 1e6, -2.0});
  CHECK(luxemburg_norm(a, rho, p, g) == luxemburg_norm(b, rho, p, g));
  CHECK(luxemburg_norm(CellField(std::vector<double>{0.0, 5.0, 0.0}), rho, p, g) == 0.0);
}

TEST_CASE("unit ball identity and agreement with a Newton root") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    const Grid g = make_grid(0.0, 1.0, n);
    const DensityField rho = testutil::random_density(rng, g);
    const ExponentField p = testutil::random_exponent(rng, n, 1.1, 6.0);
    CellField u = testutil::random_cell_field(rng, n, std::exp(testutil::uniform(rng, -3.0, 3.0)));
    const double norm = luxemburg_norm(u, rho, p, g);
    REQUIRE(norm > 0.0);
    CHECK(std::abs(modular(u, rho, p, norm, g) - 1.0) <= 1e-9);
    CHECK(norm == doctest::Approx(modular_root(u, rho, p, g)).epsilon(1e-11));
  }
}

TEST_CASE("constant exponent reduces to the weighted power mean") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    const Grid g = make_grid(0.0, 3.0, n);
    const DensityField rho = testutil::random_density(rng, g);
    const double r = testutil::uniform(rng, 1.1, 5.0);
    const CellField u = testutil::random_cell_field(rng, n, 4.0);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(std::abs(u[i]), r) * rho.mass(i);
    CHECK(luxemburg_norm(u, rho, ExponentField::constant(n, r), g) ==
          doctest::Approx(std::pow(s, 1.0 / r)).epsilon(1e-10));
  }
}

TEST_CASE("norm axioms on random samples") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    const Grid g = make_grid(0.0, 1.0, n);
    const DensityField rho = testutil::random_density(rng, g);
    const ExponentField p = testutil::random_exponent(rng, n, 1.2, 5.0);
    const CellField u = testutil::random_cell_field(rng, n, 2.0);
    const CellField v = testutil::random_cell_field(rng, n, 2.0);
    const double c = testutil::uniform(rng, -5.0, 5.0);
    CellField cu(n);
    CellField sum(n);
    for (std::size_t i = 0; i < n; ++i) {
      cu[i] = c * u[i];
      sum[i] = u[i] + v[i];
    }
    const double nu = luxemburg_norm(u, rho, p, g);
    const double nv = luxemburg_norm(v, rho, p, g);
    CHECK(std::abs(luxemburg_norm(cu, rho, p, g) - std::abs(c) * nu) <=
          1e-10 * std::max(1.0, std::abs(c) * nu));
    CHECK(luxemburg_norm(sum, rho, p, g) <= nu + nv + 1e-10);
    CHECK(nu > 0.0);
  }
}

TEST_CASE("smaller exponents embed with constant two") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    const Grid g = make_grid(0.0, 1.0, n);
    const DensityField rho = testutil::random_density(rng, g);
    const ExponentField p1 = testutil::random_exponent(rng, n, 1.1, 3.0);
    CellField p2v(n);
    for (std::size_t i = 0; i < n; ++i) p2v[i] = p1[i] + testutil::uniform(rng, 0.0, 4.0);
    const ExponentField p2(std::move(p2v));
    const CellField u = testutil::random_cell_field(rng, n, 10.0);
    CHECK(luxemburg_norm(u, rho, p1, g) <= 2.0 * luxemburg_norm(u, rho, p2, g));
  }
}

TEST_CASE("Hoelder inequality with conjugate exponents") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    const Grid g = make_grid(0.0, 1.0, n);
    const DensityField rho = testutil::random_density(rng, g);
    const ExponentField p = testutil::random_exponent(rng, n, 1.1, 6.0);
    const ExponentField q = conjugate(p);
    const CellField u = testutil::random_cell_field(rng, n, 3.0);
    const CellField v = testutil::random_cell_field(rng, n, 3.0);
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lhs += std::abs(u[i] * v[i]) * rho.density(i, g) * g.dx();
    }
    const double c = 1.0 / p.p_minus() + 1.0 / q.p_minus();
    CHECK(lhs <= c * luxemburg_norm(u, rho, p, g) * luxemburg_norm(v, rho, q, g));
  }
}
