#include <catch_amalgamated.hpp>

#include <kgfock/conserved.hpp>

using namespace kgfock;
using Catch::Approx;

namespace {

const SpectralGrid kMid(1, 16, 2.0 * std::numbers::pi, 1.0, 1.0);

CauchyPair draw_data(const BasisPtr& B, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Coords x(B->size());
  for (int a = 0; a < B->size(); ++a) x[a] = normal(rng);
  return B->synthesize(norm * x.normalized()).data0();
}

/// Moves coefficients onto a grid that differs only in the mass.
CauchyPair regrid(const CauchyPair& d, const SpectralGrid& g) {
  return CauchyPair(SpectralField(g, d.u0.coeffs()), SpectralField(g, d.u1.coeffs()));
}

}  // namespace

TEST_CASE("the linear pairing", "[conserved]") {
  std::mt19937_64 rng(81);
  const auto B = make_basis(kMid);
  const CauchyPair a = draw_data(B, 1.0, rng), b = draw_data(B, 1.0, rng);
  CHECK(I_phi(a, a) == 0.0);
  CHECK(I_phi(a, b) == Approx(-I_phi(b, a)).epsilon(1e-14));
  CHECK(I_phi(2.0 * a + b, b) == Approx(2.0 * I_phi(a, b)).epsilon(1e-13));
  for (double t : {0.3, 1.7, -2.2}) CHECK(std::abs(I_phi(evolve_linear(a, t), evolve_linear(b, t)) - I_phi(a, b)) < 1e-12);

  const std::array<double, 2> x{1.1, 0.0};
  CHECK(I_phi(a, delta_test_solution(kMid, x, false).data0()) == Approx(point_value(a.u0, x)).epsilon(1e-12));
  CHECK(I_phi(a, delta_test_solution(kMid, x, true).data0()) == Approx(point_value(a.u1, x)).epsilon(1e-12));
  CHECK_THROWS_AS(I_phi(a, CauchyPair(SpectralGrid(1, 8, 1.0, 1.0, 1.0))), GridError);
}

TEST_CASE("F through the Fock route", "[conserved]") {
  std::mt19937_64 rng(82);
  const auto B = make_basis(kMid);
  const LinearSolution phi(draw_data(B, 1.0, rng));
  const LinearSolution chi(draw_data(B, 1.0, rng));
  const CauchyPair d = draw_data(B, 0.3, rng);
  const auto V = NonlinearitySpec::power(1, 2, 0.3);

  const FockValue zero = F_fock(d, phi, V, 0.0);
  CHECK(zero.value == Approx(I_phi(d, phi.data0())).epsilon(1e-13));
  CHECK(zero.certified);
  REQUIRE(zero.certificate);

  const double t = 0.7;
  CHECK(F_fock(d, phi, V.with_lambda(0.0), t).value == Approx(I_phi(d, phi.at(t))).epsilon(1e-12));

  // linear in phi
  const LinearSolution mix(phi.data0() + (-2.0) * chi.data0());
  const double lhs = F_fock(d, mix, V, t).value;
  const double rhs = F_fock(d, phi, V, t).value - 2.0 * F_fock(d, chi, V, t).value;
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(rhs));

  // cap 4 keeps exactly the trees with at most three vertices
  const TreeSeries trees = F_trees(d, phi, V, t, 3, 16, true);
  CHECK(trees.warnings.empty());
  REQUIRE(trees.per_order.size() == 4);
  CHECK(trees.per_order[0] == Approx(I_phi(d, phi.at(t))).epsilon(1e-12));
  const double fock = F_fock(d, phi, V, t).value;
  CHECK(std::abs(fock - trees.value) < 1e-8 * std::abs(trees.value));
  // the order-one term is homogeneous of degree two in the data
  CHECK(F_trees(1.5 * d, phi, V, t, 1, 16).per_order[1] == Approx(2.25 * trees.per_order[1]).epsilon(1e-11));

  // a large datum loses the certificate
  const FockValue big = F_fock(draw_data(B, 40.0, rng), phi, V, 2.0);
  CHECK_FALSE(big.certified);
}

TEST_CASE("conservation along solutions", "[conserved]") {
  std::mt19937_64 rng(83);
  const auto B = make_basis(kMid);
  const LinearSolution phi(draw_data(B, 1.0, rng));
  const CauchyPair d0 = draw_data(B, 0.3, rng);
  const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};

  const auto lin = conservation_scan(d0, phi, NonlinearitySpec::power(1, 2, 0.0), times);
  CHECK(lin.max_rel_drift <= 1e-10);

  // V = lambda u is a mass shift with an exact solution and an exact series
  const double lam = 0.4;
  const auto shift = NonlinearitySpec::power(1, 1, lam);
  const SpectralGrid heavy(1, 16, 2.0 * std::numbers::pi, std::sqrt(1.0 + lam), 1.0);
  for (double t : {0.5, 1.5}) {
    const CauchyPair ut = regrid(evolve_linear(regrid(d0, heavy), t), kMid);
    const FockValue fv = F_fock(ut, phi, shift, t);
    CHECK(std::abs(fv.value - I_phi(d0, phi.data0())) < 1e-9 * std::abs(I_phi(d0, phi.data0())));
    CHECK(fv.truncation_mass == 0.0);
  }

  // truncation dominates the drift of the quadratic case
  SolverConfig cfg;
  cfg.dt = 1e-3;
  std::vector<double> drift;
  for (int cap : {2, 3, 4}) {
    SeriesCaps caps;
    caps.cap = cap;
    const auto scan = conservation_scan(d0, phi, NonlinearitySpec::power(1, 2, 0.3), times, caps, cfg);
    REQUIRE(scan.rows.size() == times.size());
    CHECK(scan.rows.front().abs_drift < 1e-14);
    for (const auto& row : scan.rows) CHECK(row.certified);
    CHECK(scan.rows.back().truncation_mass >= scan.rows[1].truncation_mass);
    drift.push_back(scan.max_rel_drift);
  }
  CHECK(drift[1] < drift[0]);
  CHECK(drift[2] < drift[1]);
  CHECK(drift[2] < 1e-4);
}

TEST_CASE("point recovery", "[conserved]") {
  std::mt19937_64 rng(84);
  const auto B = make_basis(kMid);
  const CauchyPair d0 = draw_data(B, 0.3, rng);
  const std::array<double, 2> x{0.9, 0.0};

  const auto lin = point_recovery(d0, NonlinearitySpec::power(1, 2, 0.0), 0.8, x);
  CHECK(lin.u.abs_error < 1e-10);
  CHECK(lin.dtu.abs_error < 1e-10);
  // swapped channels do not match
  CHECK(std::abs(lin.u.recovered - lin.dtu.exact) > 1e-3);

  SolverConfig cfg;
  cfg.dt = 1e-3;
  const auto rec = point_recovery(d0, NonlinearitySpec::power(1, 2, 0.1), 0.8, x, {}, cfg);
  CHECK(rec.u.rel_error < 5e-3);
  CHECK(rec.dtu.rel_error < 5e-3);
  CHECK(rec.certified);
}
