#include <catch_amalgamated.hpp>

#include <kgfock/majorant.hpp>

using namespace kgfock;
using Catch::Approx;

namespace {

const SpectralGrid kDesk(1, 32, 2.0 * std::numbers::pi, 1.0, 1.0);

MajorantSeries riccati(double a) { return MajorantSeries({0.0, 0.0, a}); }

}  // namespace

TEST_CASE("majorant of polynomial nonlinearities", "[majorant]") {
  const double algebra = 2.0 * discrete_sobolev_constant(kDesk, 1.0);
  const auto sq = majorant_of(NonlinearitySpec::power(1, 2, -0.05), kDesk);
  REQUIRE(sq.coeffs.size() == 3);
  CHECK(sq.coeffs[0] == 0.0);
  CHECK(sq.coeffs[1] == 0.0);
  CHECK(sq.coeffs[2] == Approx(0.05 * algebra).epsilon(1e-14));
  CHECK(std::isinf(sq.r0));

  CHECK(majorant_of(NonlinearitySpec::power(1, 2, 0.0), kDesk).is_zero());
  const auto lin = majorant_of(NonlinearitySpec::power(1, 1, 1.0), kDesk);
  CHECK(lin(0.37) == Approx(0.37).epsilon(1e-15));

  // u-slots gain 1/m, gradient and velocity slots do not
  const SpectralGrid heavy(1, 16, 2.0 * std::numbers::pi, 2.0, 1.0);
  const double alg2 = 2.0 * discrete_sobolev_constant(heavy, 1.0);
  const NonlinearitySpec mixed(1, {{1.0, {1, 1, 0}}, {-2.0, {0, 0, 3}}}, 0.5);
  const auto X = majorant_of(mixed, heavy);
  CHECK(X.coeffs[2] == Approx(0.5 * alg2 / 2.0).epsilon(1e-14));
  CHECK(X.coeffs[3] == Approx(1.0 * alg2 * alg2).epsilon(1e-14));
  CHECK_THROWS_AS(MajorantSeries({1.0, -0.1}), std::invalid_argument);
}

TEST_CASE("real flows against closed forms", "[majorant]") {
  for (double a : {0.3, 1.0, 2.5}) {
    const auto X = riccati(a);
    for (double r : {0.05, 0.2, 0.5}) {
      const double theta = 1.0 / (a * r);
      for (double frac : {0.01, 0.2, 0.5, 0.9}) {
        const double t = frac * theta;
        const double fwd = flow(X, t, r).value, bwd = flow(X, -t, r).value;
        CHECK(std::abs(fwd - r / (1 - a * r * t)) <= 1e-10 * std::max(1.0, fwd));
        CHECK(std::abs(bwd - r / (1 + a * r * t)) <= 1e-10);
        CHECK(std::abs(flow(X, -t, fwd).value - r) <= 1e-9);
        CHECK(std::abs(flow(X, t, bwd).value - r) <= 1e-9);
      }
      CHECK(flow(X, 0.5 * theta, r).theta == Approx(theta).epsilon(1e-8));
      const FlowResult past = flow(X, 1.5 * theta, r);
      CHECK(past.blowup);
      CHECK(past.theta == Approx(theta).epsilon(1e-3));
      CHECK(past.warning.empty());
    }
  }
  const MajorantSeries zero({0.0});
  CHECK(flow(zero, 7.0, 0.4).value == 0.4);
  const MajorantSeries c({0.3});
  CHECK(flow(c, -0.5, 1.0).value == Approx(0.85).epsilon(1e-13));
  CHECK(flow(c, 2.0, 1.0).value == Approx(1.6).epsilon(1e-13));

  // monotone in r, nonincreasing in t for the backward flow
  const MajorantSeries X({0.0, 0.1, 0.4, 0.2});
  double prev = 0.0;
  for (double r : {0.1, 0.2, 0.4, 0.8}) {
    const double v = flow(X, -0.7, r).value;
    CHECK(v > prev);
    prev = v;
  }
  prev = 1.0;
  for (double t : {0.0, 0.3, 0.6, 1.2}) {
    const double v = flow(X, -t, 1.0).value;
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("blow-up time", "[majorant]") {
  const auto X = riccati(0.8);
  for (double r : {0.01, 0.1, 1.0, 4.0}) {
    CHECK(blowup_time(X, r) == Approx(1.0 / (0.8 * r)).epsilon(1e-8));
    CHECK(blowup_time(X, 2 * r) == Approx(0.5 * blowup_time(X, r)).epsilon(1e-8));
  }
  CHECK(std::isinf(blowup_time(MajorantSeries({0.0}), 1.0)));
  CHECK(std::isinf(blowup_time(MajorantSeries({0.2, 1.0}), 1.0)));
  CHECK(std::isinf(blowup_time(X, 0.0)));
  const MajorantSeries cubic({0.0, 0.0, 0.0, 0.5});
  CHECK(blowup_time(cubic, 0.3) == Approx(1.0 / (2 * 0.5 * 0.09)).epsilon(1e-8));
  const MajorantSeries mixed({0.1, 0.0, 1.0});
  // int_r^inf dz / (0.1 + z^2) = (pi/2 - atan(r / sqrt(0.1))) / sqrt(0.1)
  const double w = std::sqrt(0.1);
  CHECK(blowup_time(mixed, 0.5) == Approx((std::numbers::pi / 2 - std::atan(0.5 / w)) / w).epsilon(1e-8));
  const FlowResult f = flow(mixed, 10.0, 0.5);
  CHECK(f.blowup);
  CHECK(f.theta == Approx(blowup_time(mixed, 0.5)).epsilon(1e-3));
}

TEST_CASE("admissibility certificate", "[majorant]") {
  const double a = 0.6, r0 = 2.0;
  const auto X = riccati(a);
  for (double kappa : {0.1, 0.3, 1.0}) {
    const double limit = (1 / (a * kappa)) * (1 - kappa / r0);
    CHECK(admissible(X, 0.98 * limit, kappa, r0).ok);
    CHECK_FALSE(admissible(X, 1.02 * limit, kappa, r0).ok);
    const auto rep = admissible(X, 0.5 * limit, kappa, r0);
    CHECK(rep.e_tX_kappa == Approx(kappa / (1 - a * kappa * 0.5 * limit)).epsilon(1e-10));
    CHECK(rep.witness > rep.e_tX_kappa);
    CHECK(rep.witness < r0);
    CHECK(rep.theta == Approx(1 / (a * kappa)).epsilon(1e-8));
    for (double smaller : {0.5 * kappa, 0.1 * kappa}) CHECK(admissible(X, 0.98 * limit, smaller, r0).ok);
  }
  const auto zero = admissible(X, 1e6, 0.0, r0);
  CHECK(zero.ok);
  CHECK(zero.e_tX_kappa == 0.0);
  CHECK(zero.witness > 0.0);
  CHECK(zero.witness < r0);
  CHECK_FALSE(admissible(X, 0.1, 3.0, r0).ok);
}

TEST_CASE("Taylor-flow identity", "[majorant]") {
  const RealPolynomial one{{2.5}};
  CHECK(taylor_flow_residual(riccati(1.0), one, 0.3, 0.5, 1) == 0.0);
  const RealPolynomial z{{0.0, 1.0}};
  const MajorantSeries c({0.4});
  CHECK(taylor_flow_residual(c, z, 0.7, 1.0, 2) < 1e-14);

  const RealPolynomial cube{{0.0, 0.0, 0.0, 1.0}};
  const auto X = riccati(0.5);
  const auto res = taylor_flow_residuals(X, cube, 0.3, 0.8, 20);
  CHECK(res.back() < 1e-8);
  const auto slow = taylor_flow_residuals(X, cube, 3.0, 0.8, 20);
  CHECK(slow.back() > 1e-12);
  for (std::size_t k = slow.size() - 5; k < slow.size(); ++k) CHECK(slow[k] < slow[k - 1]);
  CHECK_THROWS_AS(taylor_flow_residual(MajorantSeries({1.0}), z, 2.0, 1.0, 3), std::domain_error);
}

TEST_CASE("complex flow bound", "[majorant]") {
  const double a = 0.9;
  const auto X = riccati(a);
  const auto real = complex_flow_bound(X, 0.5, 0.7);
  CHECK(real.ok);
  CHECK(std::abs(real.value) == Approx(real.bound).epsilon(1e-11));
  const auto origin = complex_flow_bound(X, {0.3, -2.0}, 0.0);
  CHECK(std::abs(origin.value) == 0.0);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int j = 0; j < 500; ++j) {
    const double mod_tau = 2.0 * unit(rng), mod_z = 1.5 * unit(rng);
    const double scale = 0.95 / std::max(1e-12, a * mod_tau * mod_z);
    const double shrink = scale < 1.0 ? scale : 1.0;
    const std::complex<double> tau = std::polar(mod_tau * std::sqrt(shrink), 2 * std::numbers::pi * unit(rng));
    const std::complex<double> z = std::polar(mod_z * std::sqrt(shrink), 2 * std::numbers::pi * unit(rng));
    const auto cb = complex_flow_bound(X, tau, z);
    REQUIRE_FALSE(cb.blowup);
    const std::complex<double> exact = z / (1.0 - a * tau * z);
    CHECK(std::abs(cb.value - exact) < 1e-9 * std::max(1.0, std::abs(exact)));
    if (!cb.ok) ++violations;
  }
  CHECK(violations == 0);
}
