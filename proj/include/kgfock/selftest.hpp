#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fockspace.hpp"
#include "majorant.hpp"
#include "propagator.hpp"
#include "spectral.hpp"
#include "trees.hpp"

namespace kgfock {

/// One property check with a one-line description of the measured quantity.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

template <class Rng>
Coords unit_coords(int K, Rng& rng, double norm = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Coords x(K);
  for (int a = 0; a < K; ++a) x[a] = normal(rng);
  return norm * x.normalized();
}

}  // namespace detail

/// Closed-form Riccati flows, blow-up times, the Taylor-flow identity and the complex bound.
inline std::vector<CheckResult> majorant_checks(unsigned seed = 4) {
  std::vector<CheckResult> out;
  double flow_err = 0.0, theta_err = 0.0;
  for (double a : {0.3, 1.0, 2.5}) {
    const MajorantSeries X({0.0, 0.0, a});
    for (double r : {0.05, 0.2, 0.5, 1.0}) {
      const double theta = 1.0 / (a * r);
      for (double frac : {0.01, 0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double t = frac * theta;
        const double fwd = flow(X, t, r).value, bwd = flow(X, -t, r).value;
        flow_err = std::max(flow_err, std::abs(fwd - r / (1 - a * t * r)) / std::max(1.0, fwd));
        flow_err = std::max(flow_err, std::abs(bwd - r / (1 + a * t * r)));
      }
      theta_err = std::max(theta_err, std::abs(blowup_time(X, r) - theta) / theta);
    }
  }
  out.push_back({"flow closed form", flow_err <= 1e-10, "max err " + detail::sci(flow_err)});
  out.push_back({"blow-up time", theta_err <= 1e-8, "max rel err " + detail::sci(theta_err)});

  const RealPolynomial cube{{0.0, 0.0, 0.0, 1.0}};
  const double taylor = taylor_flow_residuals(MajorantSeries({0.0, 0.0, 0.5}), cube, 0.3, 0.8, 20).back();
  out.push_back({"Taylor-flow identity", taylor <= 1e-8, "residual at 20 terms " + detail::sci(taylor)});

  const double a = 0.9;
  const MajorantSeries X({0.0, 0.0, a});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int j = 0; j < 500; ++j) {
    const double mt = 2.0 * unit(rng), mz = 1.5 * unit(rng);
    const double shrink = std::min(1.0, 0.95 / std::max(1e-12, a * mt * mz));
    const auto tau = std::polar(mt * std::sqrt(shrink), 2 * std::numbers::pi * unit(rng));
    const auto z = std::polar(mz * std::sqrt(shrink), 2 * std::numbers::pi * unit(rng));
    const auto cb = complex_flow_bound(X, tau, z);
    if (cb.blowup || !cb.ok) ++violations;
  }
  out.push_back({"complex flow bound", violations == 0, std::to_string(violations) + "/500 violations"});
  return out;
}

/// Discrete inequalities, the sharp norm identity, the derivative/U/D estimates,
/// translation, commutation with creation and Wick vanishing.
inline std::vector<CheckResult> functional_checks(const SpectralGrid& g, unsigned seed = 5) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  const double two_pi = 2.0 * std::numbers::pi;
  const double root = std::pow(two_pi, 0.5 * g.dim());

  {
    const double s = g.sobolev();
    const double I = discrete_sobolev_constant(g, s);
    int fails = 0;
    for (int j = 0; j < 200; ++j) {
      const double decay = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
      const SpectralField f = random_field(g, rng, decay), h = random_field(g, rng, decay);
      const double l1 = coefficient_l1(f);
      if (max_abs_sample(f) > l1 * (1 + 1e-12)) ++fails;
      if (l1 > I * hs_norm(f, s) * (1 + 1e-12)) ++fails;
      if (hs_norm(product(f, h), s) > std::pow(2.0, s) * I * hs_norm(f, s) * hs_norm(h, s)) ++fails;
    }
    out.push_back({"sup and algebra inequalities", fails == 0, std::to_string(fails) + "/600 fails"});
  }

  {
    double err = 0.0;
    for (int j = 0; j < 20; ++j) {
      const SpectralField v = random_field(g, rng, 1.5);
      for (int k = 0; k <= 3; ++k)
        for (double r : {0.0, 1.0, 2.5})
          err = std::max(err, std::abs(pair_norm(sharp(v, 0.83, k).data0(), r - k) / hs_norm(v, r) - 1.0));
    }
    out.push_back({"sharp norm identity", err <= 1e-12, "max rel err " + detail::sci(err)});
  }

  // the estimates on a small grid keep degree-4 kernels cheap
  const SpectralGrid small(g.dim(), 8, g.period(), g.mass(), g.sobolev());
  const auto B = make_basis(small);
  const int K = B->size();
  {
    int fails = 0;
    const auto V = NonlinearitySpec::power(small.dim(), 2, 0.3);
    const MajorantSeries X = majorant_of(V, small);
    const VertexOperator op(B, V, 0.6);
    for (int j = 0; j < 100; ++j) {
      const int p = 1 + j % 3;
      const auto pf = PolyFunctional::pure_power(B, 4, detail::unit_coords(K, rng), p);
      const double r = 0.2 + 0.02 * j;
      const double n1 = norm_Nr(pf, r, NormMode::upper, 1).value;
      const Coords dir = detail::unit_coords(K, rng, 0.1 + 0.02 * j);
      if (norm_Nr(derivative_along(pf, dir), r, NormMode::upper).value > dir.norm() * n1 * (1 + 1e-12)) ++fails;
      const CauchyPair dd = B->synthesize(detail::unit_coords(K, rng, 0.05 + 0.01 * j)).data0();
      if (norm_Nr(apply_U(pf, dd, 0.1 * j), r, NormMode::upper).value > pair_norm(dd) * n1 * (1 + 1e-12)) ++fails;
      if (norm_Nr(apply_D(pf, op).value, r, NormMode::upper).value > X(r) * n1) ++fails;
    }
    out.push_back({"derivative, U and D estimates", fails == 0, std::to_string(fails) + "/300 fails"});
  }

  {
    double err = 0.0;
    PolyFunctional f(B, 4);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int p = 0; p <= 4; ++p)
      for (double& v : f.kernel_mut(p)) v = normal(rng);
    const CauchyPair d = B->synthesize(detail::unit_coords(K, rng, 0.6)).data0();
    const double t = 0.9;
    const Coords psi = B->coords(sharp_lr(d, t));
    const PolyFunctional tf = exp_U(f, d, t);
    for (int j = 0; j < 10; ++j) {
      const Coords x = detail::unit_coords(K, rng, 0.8);
      const double want = evaluate(f, x + psi);
      err = std::max(err, std::abs(evaluate(tf, x) - want) / (1 + std::abs(want)));
    }
    err = std::max(err, std::abs(pair(CoVector::vacuum(), tf) - pair(CoVector::at_data(*B, d, t), f)));
    out.push_back({"translation identity", err <= 1e-10, "max err " + detail::sci(err)});
  }

  {
    double err = 0.0;
    const auto Bg = make_basis(g);
    const double t = 0.35, tau = 1.4;
    for (int j = 0; j < 3; ++j) {
      const SpectralField phi1 = random_field(g, rng, 1.0), v = random_field(g, rng, 1.0);
      const Coords psi = Bg->coords(sharp(v, tau, 0));
      double pairing = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        pairing += root * green_hat(g, tau - t, i) * std::real(v[i] * std::conj(phi1[i]));
      pairing *= g.volume();
      PolyFunctional f(Bg, 3);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int p = 0; p <= 2; ++p)
        for (double& c : f.kernel_mut(p)) c = normal(rng);
      const auto lhs =
          derivative_along(creation_smeared(f, phi1, t), psi) - creation_smeared(derivative_along(f, psi), phi1, t);
      const auto rhs = pairing * f;
      for (int k = 0; k < 5; ++k) {
        const Coords x = detail::unit_coords(Bg->size(), rng, 0.7);
        err = std::max(err, std::abs(evaluate(lhs, x) - evaluate(rhs, x)) / (1 + std::abs(pairing)));
      }
    }
    out.push_back({"commutation with creation", err <= 1e-10, "max err " + detail::sci(err)});
  }

  {
    int nonzero = 0;
    std::vector<Coords> dirs, smear;
    for (int j = 0; j < 3; ++j) {
      dirs.push_back(detail::unit_coords(K, rng));
      smear.push_back(detail::unit_coords(K, rng));
    }
    for (int k = 0; k <= 3; ++k)
      for (int l = 0; l <= 3; ++l) {
        if (k == l) continue;
        for (int mask = 0; mask < (1 << (k + l)); ++mask) {
          if (std::popcount(static_cast<unsigned>(mask)) != k) continue;
          PolyFunctional f = PolyFunctional::vacuum(B, 3);
          int kd = 0, lc = 0;
          for (int pos = 0; pos < k + l; ++pos)
            f = (mask & (1 << pos)) ? derivative_along(f, dirs[kd++]) : multiply_linear(f, smear[lc++]);
          if (pair(CoVector::vacuum(), f) != 0.0) ++nonzero;
        }
        WickWord w;
        for (int j = 0; j < k; ++j) w.push_back(annihilation("a"));
        for (int j = 0; j < l; ++j) w.push_back(creation("c"));
        if (!vacuum_terms(w).empty()) ++nonzero;
      }
    out.push_back({"Wick vanishing", nonzero == 0, std::to_string(nonzero) + " unbalanced words with nonzero value"});
  }
  return out;
}

}  // namespace kgfock
