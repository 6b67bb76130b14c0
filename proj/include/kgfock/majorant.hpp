#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "nonlinearity.hpp"
#include "spectral.hpp"

namespace kgfock {

/// Polynomial with real coefficients c[0] + c[1] z + ...
struct RealPolynomial {
  std::vector<double> c;

  template <class T>
  T operator()(T z) const {
    T acc = T(0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + T(*it);
    return acc;
  }
  RealPolynomial derivative() const {
    RealPolynomial d;
    for (std::size_t k = 1; k < c.size(); ++k) d.c.push_back(static_cast<double>(k) * c[k]);
    return d;
  }
  friend RealPolynomial operator*(const RealPolynomial& a, const RealPolynomial& b) {
    RealPolynomial p;
    if (a.c.empty() || b.c.empty()) return p;
    p.c.assign(a.c.size() + b.c.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c.size(); ++i)
      for (std::size_t j = 0; j < b.c.size(); ++j) p.c[i + j] += a.c[i] * b.c[j];
    return p;
  }
};

/// Vector field X(z) = sum_k a_k z^k with a_k >= 0, valid on |z| < r0.
struct MajorantSeries {
  std::vector<double> coeffs;
  double r0 = std::numeric_limits<double>::infinity();
  std::string construction;

  MajorantSeries() = default;
  explicit MajorantSeries(std::vector<double> a, double radius = std::numeric_limits<double>::infinity())
      : coeffs(std::move(a)), r0(radius) {
    for (double v : coeffs)
      if (!(v >= 0.0)) throw std::invalid_argument("majorant coefficients must be nonnegative");
  }

  double operator()(double z) const { return RealPolynomial{coeffs}(z); }
  std::complex<double> operator()(std::complex<double> z) const { return RealPolynomial{coeffs}(z); }

  bool is_zero() const {
    for (double v : coeffs)
      if (v != 0.0) return false;
    return true;
  }
  int degree() const {
    for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k)
      if (coeffs[k] != 0.0) return k;
    return -1;
  }
};

/**
 * @brief Coefficient-wise majorant of the vertex operators of V.
 *
 * a_q = sum over degree-q monomials of |lambda c| (2^s I)^{q-1} times one slot factor per factor:
 * 1/m for u (from ||u||_{H^s} <= ||u||_{H^{s+1}} / m), 1 for spatial derivatives and du/dt.
 * I is the lattice Sobolev constant of the grid.
 */
inline MajorantSeries majorant_of(const NonlinearitySpec& V, const SpectralGrid& g) {
  const double s = g.sobolev();
  std::vector<double> a(static_cast<std::size_t>(V.max_degree()) + 1, 0.0);
  double algebra = 0.0;
  if (!V.is_zero()) algebra = std::pow(2.0, s) * discrete_sobolev_constant(g, s);
  for (const auto& mono : V.monomials()) {
    if (mono.coef == 0.0 || V.lambda() == 0.0) continue;
    const int q = mono.degree();
    double slots = std::pow(1.0 / g.mass(), mono.powers[0]);
    a[q] += std::abs(V.lambda() * mono.coef) * slots * std::pow(algebra, q - 1);
  }
  MajorantSeries X(a);
  X.construction = "lattice Sobolev constant, slot factors 1/m (u), 1 (gradient, time derivative)";
  return X;
}

struct FlowResult {
  double value = 0.0;
  bool blowup = false;
  double theta = std::numeric_limits<double>::infinity();
  std::string warning;
};

/// Forward blow-up time of e^{tX}(r): int_r^infty dz / X(z), or infinity.
inline double blowup_time(const MajorantSeries& X, double r) {
  if (r < 0.0) throw std::invalid_argument("blowup_time needs r >= 0");
  const double Xr = X(r);
  if (!(Xr > 0.0) || X.degree() <= 1) return std::numeric_limits<double>::infinity();
  const int d = X.degree();
  const double lead = X.coeffs[d];
  // substitute z = r / w, so the tail near w = 0 is the regular point of the integrand
  auto integrand = [&](double w) {
    if (w <= 0.0) return d == 2 ? 1.0 / (lead * r) : 0.0;
    const double z = r / w;
    return r / (w * w * X(z));
  };
  if (r == 0.0) return std::numeric_limits<double>::infinity();
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 20, 1e-15);
}

namespace detail {

constexpr double kFlowRelTol = 1e-12;
constexpr double kFlowAbsTol = 1e-15;
constexpr double kBlowupValue = 1e150;

/// Integrates dy/ds = rhs(y) for s in [0, S] with an adaptive Fehlberg 7(8) pair.
template <std::size_t N, class Rhs, class Big>
bool integrate_until(Rhs rhs, std::array<double, N>& y, double S, double& reached, Big too_big) {
  using namespace boost::numeric::odeint;
  using state = std::array<double, N>;
  auto stepper = make_controlled(kFlowAbsTol, kFlowRelTol, runge_kutta_fehlberg78<state>());
  auto sys = [&](const state& x, state& dxdt, double) { rhs(x, dxdt); };
  double s = 0.0;
  double h = std::min(S, 1e-3);
  int rejected = 0;
  while (s < S) {
    if (s + h > S) h = S - s;
    const auto res = stepper.try_step(sys, y, s, h);
    if (res == fail) {
      if (h < 1e-14 * std::max(1.0, s) || ++rejected > 100000) {
        reached = s;
        return false;
      }
      continue;
    }
    if (too_big(y)) {
      reached = s;
      return false;
    }
  }
  reached = S;
  return true;
}

}  // namespace detail

/**
 * @brief e^{tX}(r) for signed t: forward flow of dz/dt = X(z) for t > 0, backward (e^{-|t|X}) for t < 0.
 */
inline FlowResult flow(const MajorantSeries& X, double t, double r) {
  FlowResult out;
  if (r >= X.r0) throw std::invalid_argument("flow needs r < r0");
  if (t == 0.0 || X.is_zero()) {
    out.value = r;
    return out;
  }
  const double sign = t > 0.0 ? 1.0 : -1.0;
  std::array<double, 1> y{r};
  double reached = 0.0;
  const bool ok = detail::integrate_until<1>(
      [&](const std::array<double, 1>& x, std::array<double, 1>& dx) { dx[0] = sign * X(x[0]); }, y, std::abs(t),
      reached, [&](const std::array<double, 1>& x) { return std::abs(x[0]) > detail::kBlowupValue || x[0] >= X.r0; });
  out.value = y[0];
  if (!ok) {
    out.blowup = true;
    out.value = std::numeric_limits<double>::infinity();
    const double tail = y[0] > 0.0 && std::isfinite(y[0]) ? blowup_time(X, std::min(y[0], detail::kBlowupValue)) : 0.0;
    out.theta = reached + (std::isfinite(tail) ? tail : 0.0);
    const double separable = blowup_time(X, r);
    if (std::isfinite(separable) && std::abs(out.theta - separable) > 0.05 * separable)
      out.warning = "blow-up time from step collapse and separable integral differ by more than 5%";
  } else if (sign > 0.0) {
    out.theta = blowup_time(X, r);
  }
  return out;
}

struct AdmissibilityReport {
  bool ok = false;
  double t = 0.0;
  double kappa = 0.0;
  double r0 = 0.0;
  double e_tX_kappa = 0.0;
  double margin = 0.0;
  double witness = 0.0;
  double theta = 0.0;
};

/// Checks that e^{tX}(kappa) exists and stays below r0.
inline AdmissibilityReport admissible(const MajorantSeries& X, double t, double kappa, double r0) {
  AdmissibilityReport rep;
  rep.t = t;
  rep.kappa = kappa;
  rep.r0 = std::min(r0, X.r0);
  rep.theta = blowup_time(X, kappa);
  if (kappa >= rep.r0) {
    rep.e_tX_kappa = std::numeric_limits<double>::infinity();
    return rep;
  }
  const FlowResult f = flow(X, t, kappa);
  rep.e_tX_kappa = f.value;
  rep.ok = !f.blowup && f.value < rep.r0;
  if (rep.ok) {
    rep.margin = rep.r0 - f.value;
    rep.witness = std::isfinite(rep.margin) ? f.value + 0.5 * rep.margin : std::max(2.0 * f.value, 1.0);
  }
  return rep;
}

/// Partial sums sum_{k<K} t^k/k! (X^k h)(e^{-tX}(r)); element K-1 of the result is the residual after K terms.
inline std::vector<double> taylor_flow_residuals(const MajorantSeries& X, const RealPolynomial& h, double t, double r,
                                                 int Kterms) {
  const FlowResult back = flow(X, -t, r);
  if (back.blowup || !(back.value > 0.0)) throw std::domain_error("backward flow left the domain");
  const double rho = back.value;
  const RealPolynomial field{X.coeffs};
  RealPolynomial term = h;
  double partial = 0.0, coef = 1.0;
  std::vector<double> residuals;
  for (int k = 0; k < Kterms; ++k) {
    if (k > 0) coef *= t / k;
    partial += coef * term(rho);
    residuals.push_back(std::abs(h(r) - partial));
    term = field * term.derivative();
  }
  return residuals;
}

inline double taylor_flow_residual(const MajorantSeries& X, const RealPolynomial& h, double t, double r, int Kterms) {
  return taylor_flow_residuals(X, h, t, r, Kterms).back();
}

struct ComplexFlowBound {
  std::complex<double> value;
  double bound = 0.0;
  bool ok = false;
  bool blowup = false;
};

/// e^{tau X}(z) along the ray s -> s tau, compared with the real majorant e^{|tau| X}(|z|).
inline ComplexFlowBound complex_flow_bound(const MajorantSeries& X, std::complex<double> tau, std::complex<double> z) {
  ComplexFlowBound out;
  const FlowResult real = flow(X, std::abs(tau), std::abs(z));
  if (real.blowup) {
    out.blowup = true;
    return out;
  }
  out.bound = real.value;
  std::array<double, 2> y{z.real(), z.imag()};
  double reached = 0.0;
  const bool ok = detail::integrate_until<2>(
      [&](const std::array<double, 2>& x, std::array<double, 2>& dx) {
        const std::complex<double> v = tau * X(std::complex<double>(x[0], x[1]));
        dx[0] = v.real();
        dx[1] = v.imag();
      },
      y, 1.0, reached, [](const std::array<double, 2>& x) { return std::hypot(x[0], x[1]) > detail::kBlowupValue; });
  if (!ok) {
    out.blowup = true;
    return out;
  }
  out.value = {y[0], y[1]};
  out.ok = std::abs(out.value) <= out.bound + 1e-9;
  return out;
}

}  // namespace kgfock
