#include <catch_amalgamated.hpp>

#include <kgfock/texp.hpp>
#include <kgfock/trees.hpp>

using namespace kgfock;
using Catch::Approx;

namespace {

const SpectralGrid kMid(1, 16, 2.0 * std::numbers::pi, 1.0, 1.0);

Coords random_coords(int K, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Coords x(K);
  for (int a = 0; a < K; ++a) x[a] = normal(rng);
  return norm * x.normalized();
}

/// Shape of every fully contracted term of <0| e^U D(s_k)...D(s_1) phi_x |0> for V = u^2.
std::map<std::string, double> wick_shapes(int order) {
  const int leaves = order + 1;
  WickWord w;
  std::vector<int> owner;  // -1 leaf, j >= 1 vertex s_j, 0 the root x
  for (int i = 0; i < leaves; ++i) {
    w.push_back(annihilation("y" + std::to_string(i)));
    owner.push_back(-1);
  }
  for (int j = order; j >= 1; --j) {
    const std::string s = "s" + std::to_string(j);
    w.push_back(creation(s));
    w.push_back(creation(s));
    w.push_back(annihilation(s));
    owner.insert(owner.end(), {j, j, j});
  }
  w.push_back(creation("x"));
  owner.push_back(0);

  double fact = 1.0;
  for (int j = 2; j <= leaves; ++j) fact *= j;
  std::map<std::string, double> out;
  for (const auto& term : vacuum_terms(w)) {
    std::map<int, std::vector<int>> kids;  // creator owner -> annihilator positions
    for (auto [a, c] : term.pairings) kids[owner[c]].push_back(a);
    std::function<std::string(int)> shape = [&](int a) -> std::string {
      if (owner[a] < 0) return "o";
      std::vector<std::string> parts;
      for (int b : kids[owner[a]]) parts.push_back(shape(b));
      std::sort(parts.begin(), parts.end());
      std::string s = "(";
      for (const auto& p : parts) s += p;
      return s + ")";
    };
    REQUIRE(kids[0].size() == 1);
    out[shape(kids[0][0])] += term.coef / fact;
  }
  return out;
}

}  // namespace

TEST_CASE("Wick reduction of symbolic words", "[trees]") {
  // <0| a_1 a_2 (c_z)^2 = (G_1z G_2z + G_2z G_1z) <0|
  const WickWord w{annihilation("1"), annihilation("2"), creation("z"), creation("z")};
  const auto terms = vacuum_terms(w);
  REQUIRE(terms.size() == 2);
  std::set<std::vector<std::pair<int, int>>> seen;
  for (const auto& t : terms) seen.insert(t.pairings);
  CHECK(seen.count({{0, 3}, {1, 2}}) == 1);
  CHECK(seen.count({{0, 2}, {1, 3}}) == 1);

  // full normal ordering keeps residues
  const auto all = wick_reduce({annihilation("a"), creation("b")});
  REQUIRE(all.size() == 2);
  int contracted = 0;
  for (const auto& t : all) {
    if (t.pairings.empty()) {
      CHECK(t.residue == std::vector<int>{1, 0});
    } else {
      ++contracted;
      CHECK(t.residue.empty());
    }
  }
  CHECK(contracted == 1);
  CHECK(vacuum_terms({creation("a"), annihilation("b")}).empty());
  CHECK(vacuum_terms({annihilation("a"), annihilation("b"), creation("c")}).empty());
}

TEST_CASE("tree enumeration and weights", "[trees]") {
  const auto sq = NonlinearitySpec::power(1, 2, 1.0);
  const std::vector<std::size_t> counts{1, 1, 1, 2, 3, 6};
  for (int k = 0; k < static_cast<int>(counts.size()); ++k) {
    const auto trees = enumerate_trees(k, sq);
    CHECK(trees.size() == counts[k]);
    for (const auto& t : trees) {
      CHECK(t.vertices == k);
      CHECK(t.leaves == k + 1);
      CHECK(tree_from_shape(t.shape).shape == t.shape);
    }
  }
  CHECK(enumerate_trees(0, sq).front().weight == 1.0);
  CHECK(enumerate_trees(1, sq).front().weight == -1.0);
  CHECK(enumerate_trees(2, sq).front().weight == 2.0);
  for (const auto& t : enumerate_trees(3, sq)) {
    if (t.shape == "((oo)(oo))") {
      CHECK(t.weight == -1.0);
      CHECK(t.automorphisms == 8.0);
      CHECK(increasing_labelings(t) == 2.0);
    } else {
      CHECK(t.weight == -4.0);
      CHECK(increasing_labelings(t) == 1.0);
    }
  }

  const NonlinearitySpec mixed(1, {{1.0, {2, 0, 0}}, {1.0, {3, 0, 0}}}, 1.0);
  CHECK(enumerate_trees(1, mixed).size() == 2);
  CHECK(enumerate_trees(2, mixed).size() == 4);
  const RootedTree cubic = tree_from_shape("(ooo)");
  CHECK(cubic.weight == -1.0);
  CHECK(tree_from_shape("(o(ooo))").weight == 2.0);
  CHECK(enumerate_trees(2, NonlinearitySpec::power(1, 2, 0.0)).empty());
  CHECK_THROWS_AS(tree_from_shape("(o"), std::exception);
  CHECK(tree_diagram(tree_from_shape("(o(oo))")).find("arity 2") != std::string::npos);
}

TEST_CASE("tree weights match the Wick expansion", "[trees]") {
  const auto sq = NonlinearitySpec::power(1, 2, 1.0);
  for (int k = 1; k <= 3; ++k) {
    const auto wick = wick_shapes(k);
    const auto trees = enumerate_trees(k, sq);
    CHECK(wick.size() == trees.size());
    for (const auto& t : trees) {
      REQUIRE(wick.count(t.shape) == 1);
      const double sign = k % 2 ? -1.0 : 1.0;
      CHECK(t.weight == Approx(sign * wick.at(t.shape) / increasing_labelings(t)).epsilon(1e-14));
    }
  }
}

TEST_CASE("tree values against the texp series", "[trees]") {
  std::mt19937_64 rng(61);
  const auto B = make_basis(kMid);
  const auto V = NonlinearitySpec::power(1, 2, 0.3);
  const double t = 0.5;
  const LinearSolution phi = B->synthesize(random_coords(B->size(), 1.0, rng));
  const CauchyPair d = B->synthesize(random_coords(B->size(), 0.3, rng)).data0();

  // order 0 is the linear pairing at time t
  const CauchyPair phit = phi.at(t);
  const double linear = integral_product(d.u0, phit.u1) - integral_product(d.u1, phit.u0);
  const auto root = enumerate_trees(0, V).front();
  CHECK(evaluate_tree(root, d, phi, V, t, 4).value == Approx(linear).epsilon(1e-12));

  const PolyFunctional f = f_phi(B, 4, phi);
  const CoVector at = CoVector::at_data(*B, d, t);
  const NonlinearitySpec mixed(1, {{1.0, {2, 0, 0}}, {-0.7, {0, 1, 1}}}, 0.3);
  for (const auto& W : {V, mixed}) {
    TexpOptions opt;
    opt.method = TexpMethod::simplex;
    opt.panels = 6;
    double prev = pair(at, f);
    CHECK(prev == Approx(linear).epsilon(1e-12));
    for (int k = 1; k <= 3; ++k) {
      opt.order = k;
      const double cur = pair(at, texp_apply(f, W, t, opt).value);
      double trees = 0.0;
      for (const auto& tr : enumerate_trees(k, W)) {
        const TreeValue tv = evaluate_tree(tr, d, phi, W, t, 16, true);
        CHECK(tv.warning.empty());
        trees += tv.value;
      }
      CHECK(std::abs(trees - (cur - prev)) < 1e-6 * std::abs(cur - prev));
      prev = cur;
    }
  }
}

TEST_CASE("tree value structure", "[trees]") {
  std::mt19937_64 rng(62);
  const auto B = make_basis(kMid);
  const NonlinearitySpec V(1, {{1.0, {2, 0, 0}}, {0.5, {1, 0, 1}}}, 0.4);
  const LinearSolution phi = B->synthesize(random_coords(B->size(), 1.0, rng));
  const CauchyPair d = B->synthesize(random_coords(B->size(), 0.5, rng)).data0();
  for (int k = 1; k <= 2; ++k) {
    for (const auto& tr : enumerate_trees(k, V)) {
      const double base = evaluate_tree(tr, d, phi, V, 0.4, 12).value;
      const double scaled = evaluate_tree(tr, 1.7 * d, phi, V, 0.4, 12).value;
      CHECK(scaled == Approx(std::pow(1.7, tr.leaves) * base).epsilon(1e-11));
      CHECK(evaluate_tree(tr, d, phi, V, 0.0, 12).value == 0.0);
      CHECK(evaluate_tree(tr, d, phi, V.with_lambda(0.8), 0.4, 12).value ==
            Approx(std::pow(2.0, tr.vertices) * base).epsilon(1e-11));
    }
  }
  // too few nodes for a long interval is reported
  const auto chain = tree_from_shape("(o(oo))");
  CHECK_FALSE(evaluate_tree(chain, d, phi, V, 6.0, 2, true).warning.empty());
}
