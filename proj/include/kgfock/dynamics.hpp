#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "majorant.hpp"
#include "nonlinearity.hpp"
#include "propagator.hpp"

namespace kgfock {

/// Solver failures (NaN, non-contracting fixed point that cannot be rescued).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Scheme { strang, duhamel_picard };

struct SolverConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::strang;
  int picard_iterations = 30;
  double tolerance = 1e-14;
  bool dealias = false;
  /// RK4 substeps of the kick when V has time-derivative slots
  int kick_substeps = 4;
  /// record every n-th step of the path
  int record_every = 1;
};

inline Scheme parse_scheme(const std::string& s) {
  if (s == "strang") return Scheme::strang;
  if (s == "duhamel-picard") return Scheme::duhamel_picard;
  throw std::invalid_argument("unknown scheme '" + s + "' (strang | duhamel-picard)");
}

inline std::string scheme_name(Scheme s) { return s == Scheme::strang ? "strang" : "duhamel-picard"; }

struct Path {
  std::vector<double> times;
  std::vector<CauchyPair> states;
  int steps = 0;
  int rejected = 0;
};

namespace detail {

inline void require_finite(const CauchyPair& d, double t) {
  for (const auto& c : d.u0.coeffs())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw NumericalError("non-finite state at t = " + std::to_string(t));
  for (const auto& c : d.u1.coeffs())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw NumericalError("non-finite state at t = " + std::to_string(t));
}

/// Exact flow of u1' = -V(u0, u1) with u0 frozen (RK4 when V sees u1).
inline CauchyPair kick(CauchyPair d, double h, const NonlinearitySpec& V, const SolverConfig& cfg) {
  if (V.is_zero()) return d;
  if (!V.uses_velocity()) {
    d.u1 -= h * evaluate_nonlinearity(V, d, cfg.dealias);
    return d;
  }
  const int n = std::max(1, cfg.kick_substeps);
  const double k = h / n;
  auto rate = [&](const SpectralField& u1) { return -evaluate_nonlinearity(V, CauchyPair(d.u0, u1), cfg.dealias); };
  for (int j = 0; j < n; ++j) {
    const SpectralField a = rate(d.u1);
    const SpectralField b = rate(d.u1 + (0.5 * k) * a);
    const SpectralField c = rate(d.u1 + (0.5 * k) * b);
    const SpectralField e = rate(d.u1 + k * c);
    d.u1 += (k / 6.0) * (a + 2.0 * b + 2.0 * c + e);
  }
  return d;
}

inline CauchyPair strang_step(const CauchyPair& d, double h, const NonlinearitySpec& V, const SolverConfig& cfg) {
  return kick(evolve_linear(kick(d, 0.5 * h, V, cfg), h), 0.5 * h, V, cfg);
}

inline CauchyPair velocity_source(const SpectralField& v) { return CauchyPair(SpectralField(v.grid()), v); }

/// Exponential trapezoid on the Duhamel integral, solved by fixed-point iteration; false if it does not contract.
inline bool picard_step(const CauchyPair& d, double h, const NonlinearitySpec& V, const SolverConfig& cfg,
                        CauchyPair& out) {
  const CauchyPair free = evolve_linear(d, h);
  const CauchyPair old_src = evolve_linear(velocity_source(evaluate_nonlinearity(V, d, cfg.dealias)), h);
  CauchyPair cur = free - h * old_src;
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.picard_iterations; ++it) {
    const CauchyPair src = velocity_source(evaluate_nonlinearity(V, cur, cfg.dealias));
    CauchyPair next = free - (0.5 * h) * (old_src + src);
    const double inc = pair_norm(next - cur);
    cur = std::move(next);
    if (!std::isfinite(inc)) return false;
    if (inc <= cfg.tolerance * std::max(1.0, pair_norm(cur))) {
      out = std::move(cur);
      return true;
    }
    if (it > 1 && inc > 0.9 * last) return false;
    last = inc;
  }
  return false;
}

inline CauchyPair picard_advance(const CauchyPair& d, double h, const NonlinearitySpec& V, const SolverConfig& cfg,
                                 int& rejected, int depth = 0) {
  CauchyPair out;
  if (picard_step(d, h, V, cfg, out)) return out;
  ++rejected;
  if (depth >= 12) throw NumericalError("Picard iteration does not contract even at dt = " + std::to_string(h));
  const CauchyPair mid = picard_advance(d, 0.5 * h, V, cfg, rejected, depth + 1);
  return picard_advance(mid, 0.5 * h, V, cfg, rejected, depth + 1);
}

}  // namespace detail

/// One step of size h (negative h integrates backwards).
inline CauchyPair step(const CauchyPair& d, double h, const NonlinearitySpec& V, const SolverConfig& cfg,
                       int* rejected = nullptr) {
  if (V.is_zero()) return evolve_linear(d, h);
  if (cfg.scheme == Scheme::strang) return detail::strang_step(d, h, V, cfg);
  int rej = 0;
  CauchyPair out = detail::picard_advance(d, h, V, cfg, rej);
  if (rejected) *rejected += rej;
  return out;
}

/// Path from t = 0 to t = T with ceil(|T| / dt) equal steps.
inline Path solve(const CauchyPair& d0, const NonlinearitySpec& V, double T, const SolverConfig& cfg = {}) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  Path p;
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(T) / cfg.dt - 1e-9)));
  const double h = T / n;
  CauchyPair cur = d0;
  p.times.push_back(0.0);
  p.states.push_back(cur);
  const int every = std::max(1, cfg.record_every);
  for (int j = 1; j <= n; ++j) {
    cur = step(cur, h, V, cfg, &p.rejected);
    detail::require_finite(cur, j * h);
    ++p.steps;
    if (j % every == 0 || j == n) {
      p.times.push_back(j * h);
      p.states.push_back(cur);
    }
  }
  return p;
}

/// States at the requested times (any order, any sign), each segment stepped with at most dt.
inline std::vector<CauchyPair> solve_at(const CauchyPair& d0, const NonlinearitySpec& V,
                                        const std::vector<double>& times, const SolverConfig& cfg = {}) {
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<CauchyPair> out(times.size());
  // forward and backward branches both start from t = 0
  for (int dir : {1, -1}) {
    std::vector<std::size_t> branch;
    for (std::size_t i : order)
      if (dir > 0 ? times[i] >= 0.0 : times[i] < 0.0) branch.push_back(i);
    std::sort(branch.begin(), branch.end(), [&](auto a, auto b) { return std::abs(times[a]) < std::abs(times[b]); });
    CauchyPair cur = d0;
    double at = 0.0;
    for (std::size_t i : branch) {
      if (times[i] != at) {
        SolverConfig seg = cfg;
        seg.record_every = std::numeric_limits<int>::max();
        cur = solve(cur, V, times[i] - at, seg).states.back();
        at = times[i];
      }
      out[i] = cur;
    }
  }
  return out;
}

/**
 * @brief Discrete energy 1/2 int (u1^2 + |grad u|^2 + m^2 u^2) + int P(u) with P' = V.
 *
 * Only for V depending on u alone. The potential uses the same Galerkin
 * projection as the solver, so the semi-discrete flow conserves it exactly.
 */
inline double energy(const CauchyPair& d, const NonlinearitySpec& V, bool dealias = false) {
  double e = 0.5 * (hs_norm_squared(d.u1, 0.0) + hs_norm_squared(d.u0, 1.0));
  if (V.is_zero()) return e;
  if (!V.potential_form()) throw std::invalid_argument("energy needs a nonlinearity of u alone");
  for (const auto& mono : V.monomials()) {
    const int q = mono.degree();
    std::vector<const SpectralField*> factors(q, &d.u0);
    e += V.lambda() * mono.coef / (q + 1) * integral_product(d.u0, product(factors, dealias));
  }
  return e;
}

/// max over interior samples of ||du1/dt + eps^2 u0 + V(u)||_{H^{s-1}}, du1/dt by central differences.
inline double residual(const Path& p, const NonlinearitySpec& V, bool dealias = false) {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < p.states.size(); ++i) {
    const double span = p.times[i + 1] - p.times[i - 1];
    SpectralField r = (1.0 / span) * (p.states[i + 1].u1 - p.states[i - 1].u1);
    r += scale_by_eps(p.states[i].u0, 2.0);
    r += evaluate_nonlinearity(V, p.states[i], dealias);
    worst = std::max(worst, hs_norm(r, r.grid().sobolev() - 1.0));
  }
  return worst;
}

/// max_t ||[u]_t|| / e^{tX}(||[u]_0||); logged only, the flow controls functional norms and not solutions.
inline double envelope_ratio(const Path& p, const NonlinearitySpec& V) {
  const MajorantSeries X = majorant_of(V, p.states.front().grid());
  const double r = pair_norm(p.states.front());
  double worst = 0.0;
  for (std::size_t i = 0; i < p.states.size(); ++i) {
    const FlowResult env = flow(X, std::abs(p.times[i]), r);
    if (env.blowup) break;
    if (env.value > 0.0) worst = std::max(worst, pair_norm(p.states[i]) / env.value);
  }
  return worst;
}

/// Per-order paths of u = sum_k lambda^k u_k, where V = lambda W.
struct PerturbativePath {
  std::vector<double> times;
  /// orders[k][i] = [u_k] at times[i]
  std::vector<std::vector<CauchyPair>> orders;

  CauchyPair sum(double lambda, std::size_t i) const {
    CauchyPair acc = orders[0][i];
    double w = 1.0;
    for (std::size_t k = 1; k < orders.size(); ++k) {
      w *= lambda;
      acc += w * orders[k][i];
    }
    return acc;
  }
};

namespace detail {

/// Coefficient of lambda^power in W(sum_j lambda^j u_j), u_j given as slices at one time.
inline SpectralField series_source(const NonlinearitySpec& W, const std::vector<CauchyPair>& slices, int power,
                                   bool dealias) {
  SpectralField acc(slices.front().grid());
  std::vector<const CauchyPair*> args;
  std::function<void(int, int)> rec = [&](int left_slots, int left_power) {
    if (left_slots == 0) {
      if (left_power == 0) acc += multilinear_nonlinearity(W, args, dealias);
      return;
    }
    for (int j = 0; j <= left_power && j < static_cast<int>(slices.size()); ++j) {
      args.push_back(&slices[j]);
      rec(left_slots - 1, left_power - j);
      args.pop_back();
    }
  };
  for (int q : W.degrees()) rec(q, power);
  return acc;
}

}  // namespace detail

/**
 * @brief Order-by-order expansion in the coupling, interaction picture with RK4.
 *
 * u_0 is the linear solution of d0, and u_k solves the linear equation sourced by
 * the lambda^{k-1} coefficient of W(u) with zero data at t = 0. T may be negative.
 */
inline PerturbativePath perturbative(const CauchyPair& d0, const NonlinearitySpec& V, double T, int orders,
                                     double dt = 1e-2, bool dealias = false) {
  if (orders < 0) throw std::invalid_argument("orders must be >= 0");
  const NonlinearitySpec W = V.with_lambda(1.0);
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(T) / dt - 1e-9)));
  const double h = T / n;
  const SpectralGrid& g = d0.grid();
  // w[k] = [u_k]_tau pulled back to time 0
  std::vector<CauchyPair> w(orders + 1, CauchyPair(g));
  w[0] = d0;
  auto states = [&](const std::vector<CauchyPair>& v, double tau) {
    std::vector<CauchyPair> s;
    for (const auto& x : v) s.push_back(evolve_linear(x, tau));
    return s;
  };
  auto rate = [&](const std::vector<CauchyPair>& v, double tau) {
    std::vector<CauchyPair> r(orders + 1, CauchyPair(g));
    if (orders == 0 || W.is_zero()) return r;
    const auto s = states(v, tau);
    for (int k = 1; k <= orders; ++k)
      r[k] = evolve_linear(detail::velocity_source(-detail::series_source(W, s, k - 1, dealias)), -tau);
    return r;
  };
  auto axpy = [](std::vector<CauchyPair> a, double c, const std::vector<CauchyPair>& b) {
    for (std::size_t k = 1; k < a.size(); ++k) a[k] += c * b[k];
    return a;
  };
  PerturbativePath out;
  out.orders.assign(orders + 1, {});
  auto record = [&](double tau) {
    out.times.push_back(tau);
    const auto s = states(w, tau);
    for (int k = 0; k <= orders; ++k) out.orders[k].push_back(s[k]);
  };
  record(0.0);
  for (int j = 0; j < n; ++j) {
    const double tau = j * h;
    const auto k1 = rate(w, tau);
    const auto k2 = rate(axpy(w, 0.5 * h, k1), tau + 0.5 * h);
    const auto k3 = rate(axpy(w, 0.5 * h, k2), tau + 0.5 * h);
    const auto k4 = rate(axpy(w, h, k3), tau + h);
    for (int k = 1; k <= orders; ++k) w[k] += (h / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    record(tau + h);
  }
  return out;
}

}  // namespace kgfock
