#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fockspace.hpp"
#include "majorant.hpp"
#include "quadrature.hpp"

namespace kgfock {

enum class TexpMethod { ode, simplex };

/// later_left: D(s_k)...D(s_1) with s_1 < ... < s_k, i.e. dw/dt = D(t) w. earlier_left: the reverse product.
enum class TimeOrdering { later_left, earlier_left };

struct TexpOptions {
  TexpMethod method = TexpMethod::ode;
  TimeOrdering ordering = TimeOrdering::later_left;
  /// ode: relative tolerance of the step-doubling controller
  double tol = 1e-10;
  int max_steps = 100000;
  /// simplex: highest number of D factors kept
  int order = 3;
  int panels = 4;
  int per_panel = 10;
  bool dealias = false;
  /// when set, the certificate e^{tX}(kappa) < r_budget is evaluated
  std::optional<double> kappa;
  double r_budget = std::numeric_limits<double>::infinity();
};

struct TexpResult {
  PolyFunctional value;
  /// time integral of the reported dropped-term bounds
  double truncation_mass = 0.0;
  int steps = 0;
  int rejected = 0;
  int generator_calls = 0;
  bool certified = true;
  std::optional<AdmissibilityReport> certificate;
};

/// A time-dependent operator on functionals, s -> (f -> A(s) f).
using Generator = std::function<DResult(const PolyFunctional&, double)>;

namespace detail {

/// Sum over degrees of the Frobenius norms of the kernels (the upper-mode N_1).
inline double functional_size(const PolyFunctional& f) {
  double acc = 0.0;
  for (int p = 0; p <= f.cap(); ++p)
    if (f.has(p)) acc += frobenius(f.kernel(p), p, f.K());
  return acc;
}

/// Keeps the vertex tensors of the last few times; RK stages revisit them.
class VertexCache {
 public:
  VertexCache(BasisPtr basis, NonlinearitySpec V, bool dealias)
      : basis_(std::move(basis)), V_(std::move(V)), dealias_(dealias) {}

  const VertexOperator& at(double t) {
    for (const auto& op : ops_)
      if (op.time() == t) return op;
    if (ops_.size() >= 6) ops_.pop_front();
    ops_.emplace_back(basis_, V_, t, dealias_);
    return ops_.back();
  }

 private:
  BasisPtr basis_;
  NonlinearitySpec V_;
  bool dealias_;
  std::deque<VertexOperator> ops_;
};

inline DResult negate(DResult r) {
  r.value *= -1.0;
  return r;
}

}  // namespace detail

/// The generator s -> -D(s) of the time-ordered exponential.
inline Generator minus_D(const BasisPtr& basis, const NonlinearitySpec& V, bool dealias = false) {
  auto cache = std::make_shared<detail::VertexCache>(basis, V, dealias);
  return [cache](const PolyFunctional& f, double s) { return detail::negate(apply_D(f, cache->at(s))); };
}

namespace detail {

inline TexpResult texp_ode(const PolyFunctional& f, const Generator& A, double t, const TexpOptions& opt) {
  TexpResult out;
  out.value = f;
  if (t == 0.0) return out;
  // earlier_left is the later_left solution of the reflected family sigma -> A(t - sigma)
  const bool reflect = opt.ordering == TimeOrdering::earlier_left;
  auto gen = [&](const PolyFunctional& w, double s) {
    ++out.generator_calls;
    return A(w, reflect ? t - s : s);
  };
  auto rk4 = [&](const PolyFunctional& w, double s, double h, const DResult& k1, double& mass) {
    const DResult k2 = gen(PolyFunctional(w).axpy(0.5 * h, k1.value), s + 0.5 * h);
    const DResult k3 = gen(PolyFunctional(w).axpy(0.5 * h, k2.value), s + 0.5 * h);
    const DResult k4 = gen(PolyFunctional(w).axpy(h, k3.value), s + h);
    PolyFunctional next = w;
    next.axpy(h / 6.0, k1.value).axpy(h / 3.0, k2.value).axpy(h / 3.0, k3.value).axpy(h / 6.0, k4.value);
    mass = std::abs(h) / 6.0 *
           (k1.dropped_bound + 2.0 * k2.dropped_bound + 2.0 * k3.dropped_bound + k4.dropped_bound);
    return next;
  };
  const double dir = t > 0.0 ? 1.0 : -1.0;
  double s = 0.0;
  double h = dir * std::min(std::abs(t), 0.125);
  PolyFunctional& w = out.value;
  while (dir * (t - s) > 0.0) {
    if (out.steps + out.rejected >= opt.max_steps) throw std::runtime_error("texp: step budget exhausted");
    if (dir * (s + h - t) > 0.0) h = t - s;
    const DResult k1 = gen(w, s);
    double m_full = 0.0, m_a = 0.0, m_b = 0.0;
    const PolyFunctional full = rk4(w, s, h, k1, m_full);
    const PolyFunctional mid = rk4(w, s, 0.5 * h, k1, m_a);
    const PolyFunctional two = rk4(mid, s + 0.5 * h, 0.5 * h, gen(mid, s + 0.5 * h), m_b);
    const double scale = std::max(1.0, functional_size(two));
    const double err = functional_size(PolyFunctional(two).axpy(-1.0, full)) / 15.0;
    if (err <= opt.tol * scale || std::abs(h) < 1e-12) {
      w = two;
      w.axpy(1.0 / 15.0, PolyFunctional(two).axpy(-1.0, full));
      s += h;
      out.truncation_mass += m_a + m_b;
      ++out.steps;
      const double grow = err > 0.0 ? 0.9 * std::pow(opt.tol * scale / err, 0.2) : 4.0;
      h *= std::clamp(grow, 0.2, 4.0);
    } else {
      ++out.rejected;
      h *= std::clamp(0.9 * std::pow(opt.tol * scale / err, 0.2), 0.1, 0.9);
    }
  }
  return out;
}

inline TexpResult texp_simplex(const PolyFunctional& f, const Generator& A, double t, const TexpOptions& opt) {
  TexpResult out;
  out.value = f;
  if (t == 0.0 || opt.order <= 0) return out;
  const bool reflect = opt.ordering == TimeOrdering::earlier_left;
  const CompositeRule rule = composite_gauss_legendre(0.0, t, opt.panels, opt.per_panel);
  const int N = static_cast<int>(rule.nodes.size());
  // term_k(s_j) = sum_i W(j, i) A(s_i) term_{k-1}(s_i), term_0 = f
  std::vector<PolyFunctional> term(N, f);
  for (int k = 1; k <= opt.order; ++k) {
    std::vector<PolyFunctional> applied;
    applied.reserve(N);
    std::vector<double> bound(N);
    for (int i = 0; i < N; ++i) {
      const double s = reflect ? t - rule.nodes[i] : rule.nodes[i];
      DResult r = A(term[i], s);
      ++out.generator_calls;
      bound[i] = r.dropped_bound;
      applied.push_back(std::move(r.value));
    }
    PolyFunctional top(f.basis_ptr(), f.cap());
    for (int i = 0; i < N; ++i) {
      top.axpy(rule.weights[i], applied[i]);
      out.truncation_mass += std::abs(rule.weights[i]) * bound[i];
    }
    out.value += top;
    if (k == opt.order) break;
    std::vector<PolyFunctional> next;
    next.reserve(N);
    for (int j = 0; j < N; ++j) {
      PolyFunctional acc(f.basis_ptr(), f.cap());
      for (int i = 0; i < N; ++i)
        if (rule.running(j, i) != 0.0) acc.axpy(rule.running(j, i), applied[i]);
      next.push_back(std::move(acc));
    }
    term = std::move(next);
  }
  out.steps = N;
  return out;
}

}  // namespace detail

/// T exp(int_0^t A(s) ds) f for a general generator.
inline TexpResult texp_solve(const PolyFunctional& f, const Generator& A, double t, const TexpOptions& opt = {}) {
  return opt.method == TexpMethod::ode ? detail::texp_ode(f, A, t, opt) : detail::texp_simplex(f, A, t, opt);
}

/**
 * @brief T exp(int_0^t ds DD(s)) f with DD(s) = -D(s) built from V.
 *
 * Degrees above the cap of f are dropped and accounted in truncation_mass.
 */
inline TexpResult texp_apply(const PolyFunctional& f, const NonlinearitySpec& V, double t, const TexpOptions& opt = {}) {
  TexpResult out;
  if (V.is_zero()) {
    out.value = f;
  } else {
    out = texp_solve(f, minus_D(f.basis_ptr(), V, opt.dealias), t, opt);
  }
  if (opt.kappa) {
    const MajorantSeries X = majorant_of(V, f.basis().grid());
    out.certificate = admissible(X, std::abs(t), *opt.kappa, opt.r_budget);
    out.certified = out.certificate->ok;
  }
  return out;
}

/**
 * @brief texp_apply at several times from one sweep.
 *
 * With later_left ordering and the ODE route, segments compose as
 * Texp(t_i -> t_{i+1}) Texp(0 -> t_i); otherwise each time is computed afresh.
 * Times must share one sign; truncation_mass and counters are cumulative.
 */
inline std::vector<TexpResult> texp_apply_at(const PolyFunctional& f, const NonlinearitySpec& V,
                                             const std::vector<double>& times, const TexpOptions& opt = {}) {
  std::vector<TexpResult> out;
  const bool chain = opt.method == TexpMethod::ode && opt.ordering == TimeOrdering::later_left && !V.is_zero();
  if (!chain) {
    for (double t : times) out.push_back(texp_apply(f, V, t, opt));
    return out;
  }
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i]) < std::abs(times[i - 1]) || times[i] * times[i - 1] < 0.0)
      throw std::invalid_argument("texp_apply_at needs monotone times of one sign");
  const Generator A = minus_D(f.basis_ptr(), V, opt.dealias);
  const MajorantSeries X = majorant_of(V, f.basis().grid());
  TexpResult cur;
  cur.value = f;
  double at = 0.0;
  for (double t : times) {
    if (t != at) {
      const double start = at;
      const Generator shifted = [&A, start](const PolyFunctional& w, double s) { return A(w, start + s); };
      TexpResult seg = texp_solve(cur.value, shifted, t - at, opt);
      cur.value = std::move(seg.value);
      cur.truncation_mass += seg.truncation_mass;
      cur.steps += seg.steps;
      cur.rejected += seg.rejected;
      cur.generator_calls += seg.generator_calls;
      at = t;
    }
    TexpResult snap = cur;
    if (opt.kappa) {
      snap.certificate = admissible(X, std::abs(t), *opt.kappa, opt.r_budget);
      snap.certified = snap.certificate->ok;
    }
    out.push_back(std::move(snap));
  }
  return out;
}

struct PointwiseBoundReport {
  bool ok = true;
  /// e^{-tX}(r), the radius on which the bound is tested
  double radius = 0.0;
  double bound = 0.0;
  double max_value = 0.0;
  double max_ratio = 0.0;
  int samples = 0;
  int violations = 0;
  NormMode mode = NormMode::upper;
};

/**
 * @brief Samples |(Texp f)(phi)| <= N_r(f) for ||phi|| below e^{-tX}(r).
 *
 * N_r(f) uses the upper mode, which is exact for one pure power per degree.
 */
inline PointwiseBoundReport pointwise_bound_check(const PolyFunctional& f, const NonlinearitySpec& V, double t, double r,
                                                  int samples = 200, unsigned seed = 1, const TexpOptions& opt = {}) {
  PointwiseBoundReport rep;
  const MajorantSeries X = majorant_of(V, f.basis().grid());
  const FlowResult back = flow(X, -std::abs(t), r);
  rep.radius = back.value;
  if (!(rep.radius > 0.0)) {
    rep.ok = false;
    return rep;
  }
  rep.bound = norm_Nr(f, r, NormMode::upper).value;
  const PolyFunctional w = texp_apply(f, V, t, opt).value;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double reach = rep.radius * (1.0 - 1e-6);
  for (int j = 0; j < samples; ++j) {
    Coords x(f.K());
    for (int a = 0; a < f.K(); ++a) x[a] = normal(rng);
    // radii biased to the rim, where the bound is tightest
    x *= reach * std::pow(unit(rng), 0.25) / x.norm();
    const double v = std::abs(evaluate(w, x));
    rep.max_value = std::max(rep.max_value, v);
    rep.max_ratio = std::max(rep.max_ratio, v / rep.bound);
    if (v > rep.bound * (1.0 + 1e-12)) ++rep.violations;
    ++rep.samples;
  }
  rep.ok = rep.violations == 0;
  return rep;
}

struct ContinuityReport {
  std::vector<double> increments;
  /// |dt| X(r) N_r^(1)(f) per step
  std::vector<double> step_bounds;
  double max_increment = 0.0;
};

/// N_r norms of Texp(t_{i+1}) f - Texp(t_i) f over an increasing time grid.
inline ContinuityReport continuity_in_t(const PolyFunctional& f, const NonlinearitySpec& V,
                                        const std::vector<double>& times, double r, const TexpOptions& opt = {}) {
  ContinuityReport rep;
  const MajorantSeries X = majorant_of(V, f.basis().grid());
  const double slope = X(r) * norm_Nr(f, r, NormMode::upper, 1).value;
  std::vector<PolyFunctional> w;
  for (double t : times) w.push_back(texp_apply(f, V, t, opt).value);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double inc = norm_Nr(PolyFunctional(w[i]).axpy(-1.0, w[i - 1]), r, NormMode::upper).value;
    rep.increments.push_back(inc);
    rep.step_bounds.push_back(std::abs(times[i] - times[i - 1]) * slope);
    rep.max_increment = std::max(rep.max_increment, inc);
  }
  return rep;
}

}  // namespace kgfock
