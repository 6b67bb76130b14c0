#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "fockspace.hpp"
#include "texp.hpp"
#include "trees.hpp"

namespace kgfock {

/// I^phi[u] = int (u0 phi1 - u1 phi0) on one time slice.
inline double I_phi(const CauchyPair& du, const CauchyPair& dphi) {
  require_same_grid(du.grid(), dphi.grid());
  return integral_product(du.u0, dphi.u1) - integral_product(du.u1, dphi.u0);
}

/// Truncation and quadrature settings shared by both routes.
struct SeriesCaps {
  /// highest kept degree of the functional
  int cap = 4;
  TexpOptions texp;
  /// highest tree order (number of vertices)
  int order = 3;
  int nodes = 16;
  /// radius the certificate e^{tX}(||[u]_t||) must stay below
  double r_budget = 1.0;
};

struct FockValue {
  double value = 0.0;
  bool certified = true;
  std::optional<AdmissibilityReport> certificate;
  double truncation_mass = 0.0;
  int steps = 0;
};

namespace detail {

inline TexpOptions certified_options(const SeriesCaps& caps, const CauchyPair& du) {
  TexpOptions opt = caps.texp;
  opt.kappa = pair_norm(du);
  opt.r_budget = caps.r_budget;
  return opt;
}

inline FockValue fock_value(const ModeBasis& basis, const CauchyPair& du, double t, const TexpResult& w) {
  FockValue out;
  out.value = pair(CoVector::at_data(basis, du, t), w.value);
  out.certified = w.certified;
  out.certificate = w.certificate;
  out.truncation_mass = w.truncation_mass;
  out.steps = w.steps;
  return out;
}

}  // namespace detail

/// F^phi_t[u]_t = <[u]_t| Texp(-int_0^t D) |f_phi>, degree-truncated at caps.cap.
inline FockValue F_fock(const CauchyPair& du, const LinearSolution& phi, const NonlinearitySpec& V, double t,
                        const SeriesCaps& caps = {}) {
  require_same_grid(du.grid(), phi.grid());
  const BasisPtr basis = make_basis(du.grid());
  const PolyFunctional f = f_phi(basis, caps.cap, phi);
  return detail::fock_value(*basis, du, t, texp_apply(f, V, t, detail::certified_options(caps, du)));
}

struct TreeSeries {
  double value = 0.0;
  /// per_order[k] = sum of the trees with k vertices
  std::vector<double> per_order;
  std::vector<std::string> warnings;
};

/// Sum of the tree terms with at most `order` vertices, in enumeration order.
inline TreeSeries F_trees(const CauchyPair& du, const LinearSolution& phi, const NonlinearitySpec& V, double t,
                          int order, int nodes, bool check = false, bool dealias = false) {
  TreeSeries out;
  for (int k = 0; k <= order; ++k) {
    double acc = 0.0;
    for (const auto& tree : enumerate_trees(k, V)) {
      const TreeValue tv = evaluate_tree(tree, du, phi, V, t, nodes, check, dealias);
      acc += tv.value;
      if (!tv.warning.empty()) out.warnings.push_back(tree.shape + ": " + tv.warning);
    }
    out.per_order.push_back(acc);
    out.value += acc;
  }
  return out;
}

struct ScanRow {
  double t = 0.0;
  double F_t = 0.0;
  double I_0 = 0.0;
  double abs_drift = 0.0;
  double rel_drift = 0.0;
  bool certified = true;
  double truncation_mass = 0.0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  /// solver states at the scanned times
  std::vector<CauchyPair> states;
  double max_rel_drift = 0.0;
};

/**
 * @brief Solves from d0 and compares F_t at [u]_t with I_0 from the t = 0 data.
 *
 * Times must be nonnegative and increasing; the Texp sweep is shared across them.
 */
inline ScanResult conservation_scan(const CauchyPair& d0, const LinearSolution& phi, const NonlinearitySpec& V,
                                    const std::vector<double>& times, const SeriesCaps& caps = {},
                                    const SolverConfig& cfg = {}) {
  require_same_grid(d0.grid(), phi.grid());
  ScanResult out;
  out.states = solve_at(d0, V, times, cfg);
  const double I0 = I_phi(d0, phi.data0());
  const BasisPtr basis = make_basis(d0.grid());
  const PolyFunctional f = f_phi(basis, caps.cap, phi);
  TexpOptions opt = caps.texp;
  opt.r_budget = caps.r_budget;
  const auto ws = texp_apply_at(f, V, times, opt);
  const MajorantSeries X = majorant_of(V, d0.grid());
  for (std::size_t i = 0; i < times.size(); ++i) {
    ScanRow row;
    row.t = times[i];
    row.F_t = pair(CoVector::at_data(*basis, out.states[i], times[i]), ws[i].value);
    row.I_0 = I0;
    row.abs_drift = std::abs(row.F_t - I0);
    row.rel_drift = row.abs_drift / std::max(std::abs(I0), 1e-300);
    row.certified = admissible(X, std::abs(times[i]), pair_norm(out.states[i]), caps.r_budget).ok;
    row.truncation_mass = ws[i].truncation_mass;
    out.max_rel_drift = std::max(out.max_rel_drift, row.rel_drift);
    out.rows.push_back(row);
  }
  return out;
}

struct RecoveryChannel {
  double recovered = 0.0;
  double exact = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

struct RecoveryResult {
  /// test data (0, delta): u(0, x)
  RecoveryChannel u;
  /// test data (-delta, 0): du/dt(0, x)
  RecoveryChannel dtu;
  bool certified = true;
};

/// Test solutions whose data at time 0 are the bandlimited delta at x in one slot.
inline LinearSolution delta_test_solution(const SpectralGrid& g, const std::array<double, 2>& x, bool velocity_channel) {
  const SpectralField delta = dirichlet_kernel(g, x);
  if (velocity_channel) return LinearSolution(CauchyPair(-delta, SpectralField(g)));
  return LinearSolution(CauchyPair(SpectralField(g), delta));
}

/**
 * @brief Recovers u(0, x) and du/dt(0, x) from the solver data at time t.
 *
 * Both channels share one Texp sweep per test solution; the exact values are
 * read from the solver's t = 0 data.
 */
inline RecoveryResult point_recovery(const CauchyPair& d0, const NonlinearitySpec& V, double t,
                                     const std::array<double, 2>& x, const SeriesCaps& caps = {},
                                     const SolverConfig& cfg = {}) {
  const SpectralGrid& g = d0.grid();
  const CauchyPair ut = solve_at(d0, V, {t}, cfg).front();
  RecoveryResult out;
  auto channel = [&](bool velocity, double exact) {
    const FockValue fv = F_fock(ut, delta_test_solution(g, x, velocity), V, t, caps);
    out.certified = out.certified && fv.certified;
    RecoveryChannel c;
    c.recovered = fv.value;
    c.exact = exact;
    c.abs_error = std::abs(fv.value - exact);
    c.rel_error = c.abs_error / std::max(std::abs(exact), 1e-300);
    return c;
  };
  out.u = channel(false, point_value(d0.u0, x));
  out.dtu = channel(true, point_value(d0.u1, x));
  return out;
}

}  // namespace kgfock
