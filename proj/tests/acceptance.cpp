#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <kgfock/kgfock.hpp>

using namespace kgfock;

namespace {

// desk configuration
const SpectralGrid kDesk(1, 32, 2.0 * std::numbers::pi, 1.0, 1.0);
constexpr double kLambda = 0.05;
constexpr double kDataNorm = 0.3;
constexpr double kT = 2.0;
constexpr double kBudget = 1.0;

struct Desk {
  BasisPtr basis = make_basis(kDesk);
  NonlinearitySpec V = NonlinearitySpec::power(1, 2, kLambda);
  CauchyPair d0;
  LinearSolution phi;
  std::vector<double> times{0.0, 0.25 * kT, 0.5 * kT, 0.75 * kT, kT};
  SolverConfig solver;

  Desk() {
    std::mt19937_64 rng(20240917);
    d0 = draw(kDataNorm, rng).data0();
    phi = draw(1.0, rng);
    solver.dt = 1e-3;
  }

  LinearSolution draw(double norm, std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Coords x(basis->size());
    for (int a = 0; a < basis->size(); ++a) x[a] = normal(rng);
    return basis->synthesize(norm * x.normalized());
  }
};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using detail::sci;

// --------------------------------------------------------------------------

struct ScanCache {
  ScanResult scan;
  std::vector<double> drift_by_cap;
};

Outcome conservation(const Desk& desk, ScanCache& cache) {
  Outcome out;
  const MajorantSeries X = majorant_of(desk.V, kDesk);
  const FlowResult env = flow(X, kT, kDataNorm);
  out.require(!env.blowup && env.value < 0.8 * kBudget, "e^{TX}(|d0|) < 0.8 r-budget");
  for (int cap : {2, 3, 4}) {
    SeriesCaps caps;
    caps.cap = cap;
    caps.r_budget = kBudget;
    ScanResult scan = conservation_scan(desk.d0, desk.phi, desk.V, desk.times, caps, desk.solver);
    cache.drift_by_cap.push_back(scan.max_rel_drift);
    if (cap == 4) cache.scan = std::move(scan);
  }
  const auto& d = cache.drift_by_cap;
  for (const auto& row : cache.scan.rows) out.require(row.certified, "certified at t = " + sci(row.t));
  out.require(d[2] <= 1e-3, "max drift <= 1e-3");
  out.require(d[1] < d[0] && d[2] < d[1], "drift decreases with P");
  out.detail << "T = " << kT << ", e^{TX}(|d0|) = " << sci(env.value) << ", max rel drift P=4: " << sci(d[2])
             << " (P=2: " << sci(d[0]) << ", P=3: " << sci(d[1]) << ")";
  return out;
}

Outcome dual_route(const Desk& desk, const ScanCache& cache) {
  Outcome out;
  double worst = 0.0;
  for (std::size_t i = 0; i < desk.times.size(); ++i) {
    const double t = desk.times[i];
    const TreeSeries trees = F_trees(cache.scan.states[i], desk.phi, desk.V, t, 3, 24, true);
    for (const auto& w : trees.warnings) out.require(false, w);
    worst = std::max(worst, std::abs(trees.value - cache.scan.rows[i].F_t));
  }
  out.require(worst <= 1e-5, "|F_fock - F_trees| <= 1e-5");
  out.detail << "max |F_fock - F_trees| over scanned t: " << sci(worst);
  return out;
}

Outcome order_oracle(const Desk& desk, const ScanCache& cache) {
  Outcome out;
  // data [u]_T from the solver; the perturbative solver runs back to t = 0
  const CauchyPair& dT = cache.scan.states.back();
  auto first_order = [&](double dt) {
    const auto p = perturbative(dT, desk.V, -kT, 1, dt);
    return I_phi(p.orders[1].back(), desk.phi.data0());
  };
  const double coarse = first_order(0.02), fine = first_order(0.01);
  const double coef = (16.0 * fine - coarse) / 15.0;
  const RootedTree tree = enumerate_trees(1, desk.V).front();
  const TreeValue tv = evaluate_tree(tree, dT, desk.phi, desk.V.with_lambda(1.0), kT, 32, true);
  out.require(tv.warning.empty(), tv.warning);
  const double rel = std::abs(coef - tv.value) / std::abs(tv.value);
  out.require(rel <= 1e-6, "relative gap <= 1e-6");
  out.detail << "lambda^1 coefficient " << sci(coef) << " vs order-1 tree " << sci(tv.value) << ", rel gap " << sci(rel);
  return out;
}

Outcome from_checks(const std::vector<CheckResult>& checks) {
  Outcome out;
  for (std::size_t j = 0; j < checks.size(); ++j) {
    out.require(checks[j].pass, checks[j].name);
    out.detail << (j ? "; " : "") << checks[j].name << ": " << checks[j].detail;
  }
  return out;
}

Outcome pointwise(const Desk& desk) {
  Outcome out;
  std::mt19937_64 rng(6);
  const auto f = PolyFunctional::pure_power(desk.basis, 4, detail::unit_coords(desk.basis->size(), rng), 2);
  const double r = 0.5;
  int violations = 0, samples = 0;
  double worst = 0.0;
  for (double t : {0.2 * kT, 0.4 * kT, 0.6 * kT, 0.8 * kT, kT}) {
    const auto rep = pointwise_bound_check(f, desk.V, t, r, 200, 7 + static_cast<unsigned>(samples));
    violations += rep.violations;
    samples += rep.samples;
    worst = std::max(worst, rep.max_ratio);
    out.require(rep.radius > 0.0, "positive radius");
  }
  out.require(violations == 0 && samples == 1000, "no violations over 1000 samples");
  out.detail << violations << " violations in " << samples << " samples, max |Texp f|/N_r(f) = " << sci(worst);
  return out;
}

Outcome recovery(const Desk& desk) {
  Outcome out;
  // sample point where neither u nor du/dt is small
  const auto u = to_samples(desk.d0.u0), ut = to_samples(desk.d0.u1);
  const double umax = max_abs_sample(desk.d0.u0), utmax = max_abs_sample(desk.d0.u1);
  std::size_t best = 0;
  double score = -1.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double s = std::min(std::abs(u[j]) / umax, std::abs(ut[j]) / utmax);
    if (s > score) {
      score = s;
      best = j;
    }
  }
  const std::array<double, 2> x{kDesk.period() * static_cast<double>(best) / static_cast<double>(u.size()), 0.0};
  SeriesCaps caps;
  caps.r_budget = kBudget;
  const auto lin = point_recovery(desk.d0, desk.V.with_lambda(0.0), kT, x, caps, desk.solver);
  const auto rec = point_recovery(desk.d0, desk.V, kT, x, caps, desk.solver);
  out.require(lin.u.abs_error <= 1e-10 && lin.dtu.abs_error <= 1e-10, "exact linear recovery");
  out.require(rec.u.rel_error <= 5e-3 && rec.dtu.rel_error <= 5e-3, "relative error <= 5e-3");
  out.detail << "x = " << sci(x[0]) << ", rel err u " << sci(rec.u.rel_error) << ", du/dt " << sci(rec.dtu.rel_error)
             << "; lambda = 0 abs err " << sci(std::max(lin.u.abs_error, lin.dtu.abs_error));
  return out;
}

}  // namespace

int main() {
  const Desk desk;
  ScanCache cache;
  int failed = 0;
  auto run = [&](int id, const char* name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %d %s %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
  };
  run(1, "conservation", [&] { return conservation(desk, cache); });
  run(2, "dual-route agreement", [&] { return dual_route(desk, cache); });
  run(3, "order-by-order oracle", [&] { return order_oracle(desk, cache); });
  run(4, "majorant flows", [] { return from_checks(majorant_checks()); });
  run(5, "functional-analysis suite", [] { return from_checks(functional_checks(kDesk)); });
  run(6, "pointwise bound", [&] { return pointwise(desk); });
  run(7, "point recovery", [&] { return recovery(desk); });
  std::printf("%d of 7 criteria passed\n", 7 - failed);
  return failed == 0 ? 0 : 1;
}
