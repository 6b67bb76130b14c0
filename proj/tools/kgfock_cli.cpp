#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <CLI11.hpp>

#include <kgfock/kgfock.hpp>

using namespace kgfock;
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// section -> accepted keys
const std::map<std::string, std::set<std::string>> kKeys{
    {"grid", {"n", "M", "L", "m", "s"}},
    {"nonlinearity", {"monomials", "lambda"}},
    {"solver", {"dt", "scheme"}},
    {"series", {"capP", "order", "nodes", "r_budget", "method", "tol"}},
    {"experiment", {"T", "times", "phi", "data_norm", "x"}},
};

double parse_number(const std::string& key, std::string text) {
  text.erase(0, text.find_first_not_of(" \t"));
  text.erase(text.find_last_not_of(" \t") + 1);
  double scale = 1.0;
  if (text.size() >= 2 && text.compare(text.size() - 2, 2, "pi") == 0) {
    scale = std::numbers::pi;
    text.resize(text.size() - 2);
    if (text.empty()) text = "1";
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != text.size()) throw ConfigError(key + ": not a number");
  return v * scale;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v)) throw ConfigError(key + ": not an integer");
  return static_cast<int>(v);
}

struct RunConfig {
  SpectralGrid grid{1, 32, 2.0 * std::numbers::pi, 1.0, 1.0};
  std::string monomials = "1:2,0,0";
  double lambda = 0.05;
  SolverConfig solver;
  SeriesCaps caps;
  double T = 2.0;
  std::vector<double> times;
  /// random | delta-u | delta-dtu
  std::string phi = "random";
  double data_norm = 0.3;
  std::string x = "auto";
  unsigned long long seed = 20240917;

  NonlinearitySpec V() const { return NonlinearitySpec(grid.dim(), parse_monomials(monomials, grid.dim()), lambda); }
};

RunConfig load_config(const std::string& path) {
  RunConfig c;
  c.solver.dt = 1e-3;
  c.caps.nodes = 24;
  if (!path.empty()) {
    pt::ptree tree;
    try {
      pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [section, body] : tree) {
      const auto known = kKeys.find(section);
      if (known == kKeys.end()) throw ConfigError("unknown section [" + section + "]");
      for (const auto& [key, value] : body)
        if (!known->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
    }
    auto get = [&](const char* k) { return tree.get_optional<std::string>(pt::ptree::path_type(k, '/')); };
    int n = c.grid.dim(), M = c.grid.modes_per_dim();
    double L = c.grid.period(), m = c.grid.mass(), s = c.grid.sobolev();
    if (auto v = get("grid/n")) n = parse_int("grid.n", *v);
    if (auto v = get("grid/M")) M = parse_int("grid.M", *v);
    if (auto v = get("grid/L")) L = parse_number("grid.L", *v);
    if (auto v = get("grid/m")) m = parse_number("grid.m", *v);
    if (auto v = get("grid/s")) s = parse_number("grid.s", *v);
    try {
      c.grid = SpectralGrid(n, M, L, m, s);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
    if (auto v = get("nonlinearity/monomials")) c.monomials = *v;
    if (auto v = get("nonlinearity/lambda")) c.lambda = parse_number("nonlinearity.lambda", *v);
    if (auto v = get("solver/dt")) c.solver.dt = parse_number("solver.dt", *v);
    if (auto v = get("solver/scheme")) {
      try {
        c.solver.scheme = parse_scheme(*v);
      } catch (const std::exception&) {
        throw ConfigError("solver.scheme: expected strang or duhamel-picard");
      }
    }
    if (auto v = get("series/capP")) c.caps.cap = parse_int("series.capP", *v);
    if (auto v = get("series/order")) c.caps.order = parse_int("series.order", *v);
    if (auto v = get("series/nodes")) c.caps.nodes = parse_int("series.nodes", *v);
    if (auto v = get("series/r_budget")) c.caps.r_budget = parse_number("series.r_budget", *v);
    if (auto v = get("series/tol")) c.caps.texp.tol = parse_number("series.tol", *v);
    if (auto v = get("series/method")) {
      if (*v == "ode") c.caps.texp.method = TexpMethod::ode;
      else if (*v == "simplex") c.caps.texp.method = TexpMethod::simplex;
      else throw ConfigError("series.method: expected ode or simplex");
    }
    if (auto v = get("experiment/T")) c.T = parse_number("experiment.T", *v);
    if (auto v = get("experiment/times")) c.times = parse_list("experiment.times", *v);
    if (auto v = get("experiment/phi")) c.phi = *v;
    if (auto v = get("experiment/data_norm")) c.data_norm = parse_number("experiment.data_norm", *v);
    if (auto v = get("experiment/x")) c.x = *v;
  }
  c.caps.texp.order = c.caps.order;
  if (c.times.empty()) c.times = {0.0, 0.25 * c.T, 0.5 * c.T, 0.75 * c.T, c.T};
  try {
    (void)c.V();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("nonlinearity.monomials: ") + e.what());
  }
  if (!(c.solver.dt > 0.0)) throw ConfigError("solver.dt must be positive");
  if (c.caps.cap < 1) throw ConfigError("series.capP must be at least 1");
  if (c.caps.order < 0 || c.caps.nodes < 1) throw ConfigError("series.order and series.nodes must be positive");
  if (c.phi != "random" && c.phi != "delta-u" && c.phi != "delta-dtu")
    throw ConfigError("experiment.phi: expected random, delta-u or delta-dtu");
  if (c.data_norm < 0.0) throw ConfigError("experiment.data_norm must be nonnegative");
  for (std::size_t i = 0; i < c.times.size(); ++i)
    if (c.times[i] < 0.0 || (i && c.times[i] < c.times[i - 1]))
      throw ConfigError("experiment.times must be nonnegative and increasing");
  return c;
}

json echo(const RunConfig& c) {
  return {{"grid", to_json(c.grid)},
          {"nonlinearity", {{"monomials", c.monomials}, {"lambda", c.lambda}}},
          {"solver", {{"dt", c.solver.dt}, {"scheme", scheme_name(c.solver.scheme)}}},
          {"series",
           {{"capP", c.caps.cap},
            {"order", c.caps.order},
            {"nodes", c.caps.nodes},
            {"r_budget", c.caps.r_budget},
            {"method", c.caps.texp.method == TexpMethod::ode ? "ode" : "simplex"},
            {"tol", c.caps.texp.tol}}},
          {"experiment", {{"T", c.T}, {"times", c.times}, {"phi", c.phi}, {"data_norm", c.data_norm}, {"x", c.x}}},
          {"seed", c.seed}};
}

struct Setup {
  BasisPtr basis;
  CauchyPair d0;
  LinearSolution phi;
};

LinearSolution draw_solution(const ModeBasis& basis, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Coords x(basis.size());
  for (int a = 0; a < basis.size(); ++a) x[a] = normal(rng);
  return basis.synthesize(norm * x.normalized());
}

/// Point where neither u nor du/dt of the data is small.
std::array<double, 2> pick_point(const RunConfig& c, const CauchyPair& d) {
  if (c.x != "auto") {
    const auto xs = parse_list("experiment.x", c.x);
    if (static_cast<int>(xs.size()) != c.grid.dim()) throw ConfigError("experiment.x needs n coordinates");
    return {xs[0], xs.size() > 1 ? xs[1] : 0.0};
  }
  const auto u = to_samples(d.u0), ut = to_samples(d.u1);
  const double umax = max_abs_sample(d.u0), utmax = max_abs_sample(d.u1);
  std::size_t best = 0;
  double score = -1.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double sc = std::min(std::abs(u[j]) / std::max(umax, 1e-300), std::abs(ut[j]) / std::max(utmax, 1e-300));
    if (sc > score) {
      score = sc;
      best = j;
    }
  }
  const int M = c.grid.modes_per_dim();
  const double h = c.grid.period() / M;
  if (c.grid.dim() == 1) return {h * static_cast<double>(best), 0.0};
  return {h * static_cast<double>(best / M), h * static_cast<double>(best % M)};
}

Setup make_setup(const RunConfig& c) {
  Setup s;
  s.basis = make_basis(c.grid);
  std::mt19937_64 rng(c.seed);
  s.d0 = draw_solution(*s.basis, c.data_norm, rng).data0();
  s.phi = draw_solution(*s.basis, 1.0, rng);
  if (c.phi != "random") s.phi = delta_test_solution(c.grid, pick_point(c, s.d0), c.phi == "delta-dtu");
  return s;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

const char* kPlotScript = R"(import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "conserve.csv"
with open(path) as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
drift = [max(float(r["rel_drift"]), 1e-17) for r in rows]
plt.semilogy(t, drift, "o-")
plt.xlabel("t")
plt.ylabel("relative drift")
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
)";

int cmd_simulate(const RunConfig& c, const fs::path& out) {
  const Setup s = make_setup(c);
  const auto V = c.V();
  SolverConfig cfg = c.solver;
  const long steps = static_cast<long>(std::ceil(std::abs(c.T) / cfg.dt));
  cfg.record_every = static_cast<int>(std::max(1L, steps / 200));
  const Path p = solve(s.d0, V, c.T, cfg);
  save_path((out / "path").string(), p);
  const bool potential = V.potential_form();
  std::ofstream csv(out / "simulate.csv");
  csv << "t,norm,energy\n";
  for (std::size_t i = 0; i < p.times.size(); ++i)
    csv << num(p.times[i]) << ',' << num(pair_norm(p.states[i])) << ','
        << (potential ? num(energy(p.states[i], V)) : std::string("nan")) << '\n';
  json summary{{"command", "simulate"}, {"config", echo(c)},         {"steps", p.steps},
               {"rejected", p.rejected}, {"residual", residual(p, V)}, {"records", p.times.size()}};
  if (potential) summary["energy_drift"] = std::abs(energy(p.states.back(), V) - energy(p.states.front(), V));
  write_json(out / "summary.json", summary);
  std::printf("simulate: %d steps to T = %g, residual %.3e\n", p.steps, c.T, residual(p, V));
  return 0;
}

int cmd_conserve(const RunConfig& c, const fs::path& out, bool plot) {
  const Setup s = make_setup(c);
  const ScanResult scan = conservation_scan(s.d0, s.phi, c.V(), c.times, c.caps, c.solver);
  std::ofstream csv(out / "conserve.csv");
  csv << "t,F_t,I_0,abs_drift,rel_drift,certified,truncation_mass\n";
  for (const auto& r : scan.rows)
    csv << num(r.t) << ',' << num(r.F_t) << ',' << num(r.I_0) << ',' << num(r.abs_drift) << ',' << num(r.rel_drift)
        << ',' << (r.certified ? 1 : 0) << ',' << num(r.truncation_mass) << '\n';
  bool all_certified = true;
  for (const auto& r : scan.rows) all_certified = all_certified && r.certified;
  write_json(out / "summary.json", {{"command", "conserve"},
                                    {"config", echo(c)},
                                    {"I_0", scan.rows.front().I_0},
                                    {"max_rel_drift", scan.max_rel_drift},
                                    {"certified", all_certified}});
  if (plot) std::ofstream(out / "plot_drift.py") << kPlotScript;
  std::printf("conserve: max relative drift %.3e over %zu times%s\n", scan.max_rel_drift, scan.rows.size(),
              all_certified ? "" : " (not certified)");
  return 0;
}

int cmd_certify(const RunConfig& c, const fs::path& out) {
  const MajorantSeries X = majorant_of(c.V(), c.grid);
  const AdmissibilityReport rep = admissible(X, c.T, c.data_norm, c.caps.r_budget);
  write_json(out / "certify.json", {{"t", rep.t},
                                    {"kappa", rep.kappa},
                                    {"r0", rep.r0},
                                    {"e_tX_kappa", rep.e_tX_kappa},
                                    {"ok", rep.ok},
                                    {"theta", rep.theta}});
  std::printf("certify: e^{tX}(kappa) = %.6g at t = %g, theta = %.6g, %s\n", rep.e_tX_kappa, rep.t, rep.theta,
              rep.ok ? "ok" : "not admissible");
  return 0;
}

int cmd_trees(const RunConfig& c, const fs::path& out) {
  const auto V = c.V();
  json trees = json::array();
  std::ofstream txt(out / "trees.txt");
  for (int k = 0; k <= c.caps.order; ++k)
    for (const auto& t : enumerate_trees(k, V)) {
      trees.push_back(to_json(t));
      txt << t.shape << "  weight " << num(t.weight) << '\n' << tree_diagram(t) << '\n';
    }
  write_json(out / "trees.json", {{"order", c.caps.order}, {"degrees", V.degrees()}, {"trees", trees}});
  std::printf("trees: %zu diagrams up to order %d\n", trees.size(), c.caps.order);
  return 0;
}

int cmd_recover(const RunConfig& c, const fs::path& out) {
  const Setup s = make_setup(c);
  const auto x = pick_point(c, s.d0);
  const RecoveryResult rec = point_recovery(s.d0, c.V(), c.T, x, c.caps, c.solver);
  auto channel = [](const RecoveryChannel& ch) {
    return json{{"recovered", ch.recovered}, {"exact", ch.exact}, {"abs_error", ch.abs_error},
                {"rel_error", ch.rel_error}};
  };
  json xs = c.grid.dim() == 1 ? json{x[0]} : json{x[0], x[1]};
  write_json(out / "recover.json", {{"config", echo(c)},
                                    {"x", xs},
                                    {"t", c.T},
                                    {"u", channel(rec.u)},
                                    {"dtu", channel(rec.dtu)},
                                    {"certified", rec.certified}});
  std::printf("recover: u rel err %.3e, du/dt rel err %.3e\n", rec.u.rel_error, rec.dtu.rel_error);
  return 0;
}

int cmd_selftest(const RunConfig& c, const fs::path& out) {
  std::vector<CheckResult> checks = majorant_checks(static_cast<unsigned>(c.seed));
  for (auto& r : functional_checks(c.grid, static_cast<unsigned>(c.seed))) checks.push_back(std::move(r));

  // golden kernels: a short Texp result written, re-read and compared bit for bit
  {
    const SpectralGrid small(c.grid.dim(), 8, c.grid.period(), c.grid.mass(), c.grid.sobolev());
    const auto B = make_basis(small);
    std::mt19937_64 rng(c.seed);
    const PolyFunctional f = f_phi(B, 3, draw_solution(*B, 1.0, rng));
    const PolyFunctional w = texp_apply(f, NonlinearitySpec::power(small.dim(), 2, 0.2), 0.5).value;
    write_json(out / "golden_kernels.json", to_json(w));
    std::ifstream is(out / "golden_kernels.json");
    const PolyFunctional back = functional_from_json(json::parse(is), B);
    bool same = true;
    for (int p = 0; p <= w.cap(); ++p) same = same && w.kernel(p) == back.kernel(p);
    checks.push_back({"kernel JSON round trip", same, same ? "identical" : "kernels differ"});
  }

  // a small conservation run and the tree route on it
  {
    const SpectralGrid small(c.grid.dim(), 16, c.grid.period(), c.grid.mass(), c.grid.sobolev());
    const auto B = make_basis(small);
    std::mt19937_64 rng(c.seed);
    const CauchyPair d0 = draw_solution(*B, 0.3, rng).data0();
    const LinearSolution phi = draw_solution(*B, 1.0, rng);
    const auto V = NonlinearitySpec::power(small.dim(), 2, 0.05);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    const ScanResult scan = conservation_scan(d0, phi, V, {0.0, 0.5, 1.0}, {}, cfg);
    checks.push_back({"conservation drift", scan.max_rel_drift <= 1e-6, "max rel drift " + detail::sci(scan.max_rel_drift)});
    const double gap = std::abs(F_trees(scan.states.back(), phi, V, 1.0, 3, 20).value - scan.rows.back().F_t);
    checks.push_back({"Fock and tree routes", gap <= 1e-8, "gap " + detail::sci(gap)});
  }

  int passed = 0;
  for (const auto& r : checks) {
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    passed += r.pass;
  }
  const int failed = static_cast<int>(checks.size()) - passed;
  std::printf("%d passed, %d failed\n", passed, failed);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conserved functionals of nonlinear Klein-Gordon flows on a periodic grid"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config, out = ".";
  std::optional<unsigned long long> seed;
  app.add_option("--config", config, "ini file with [grid] [nonlinearity] [solver] [series] [experiment]");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "seed for the random data and test solution");
  bool plot = false;
  auto* simulate = app.add_subcommand("simulate", "solve and write the path");
  auto* conserve = app.add_subcommand("conserve", "conservation scan to CSV");
  conserve->add_flag("--plot", plot, "also write a drift plot script");
  auto* certify = app.add_subcommand("certify", "majorant certificate for the data");
  auto* trees = app.add_subcommand("trees", "enumerate tree diagrams");
  auto* recover = app.add_subcommand("recover", "recover u and du/dt at a point from later data");
  auto* selftest = app.add_subcommand("selftest", "run the property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c = load_config(config);
    if (seed) c.seed = *seed;
    fs::create_directories(out);
    if (*simulate) return cmd_simulate(c, out);
    if (*conserve) return cmd_conserve(c, out, plot);
    if (*certify) return cmd_certify(c, out);
    if (*trees) return cmd_trees(c, out);
    if (*recover) return cmd_recover(c, out);
    if (*selftest) return cmd_selftest(c, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const GridError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
