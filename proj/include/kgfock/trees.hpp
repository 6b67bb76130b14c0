#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nonlinearity.hpp"
#include "propagator.hpp"
#include "quadrature.hpp"

namespace kgfock {

// ---------------------------------------------------------------------------
// Symbolic Wick reduction

struct WickSymbol {
  enum class Kind { creation, annihilation };
  Kind kind;
  std::string label;
};

using WickWord = std::vector<WickSymbol>;

inline WickSymbol creation(std::string label) { return {WickSymbol::Kind::creation, std::move(label)}; }
inline WickSymbol annihilation(std::string label) { return {WickSymbol::Kind::annihilation, std::move(label)}; }

/// One term of a reduced word: a product of pairings G(annihilator - creator) times a normal-ordered residue.
struct WickTerm {
  double coef = 1.0;
  /// (annihilator position, creator position) in the original word
  std::vector<std::pair<int, int>> pairings;
  std::vector<int> residue;
};

namespace detail {

inline void wick_expand(const WickWord& w, std::vector<int>& cur, std::vector<std::pair<int, int>>& pairs,
                        bool vacuum, std::vector<WickTerm>& out) {
  using K = WickSymbol::Kind;
  if (vacuum && !cur.empty()) {
    // <0| creation = 0 and annihilation |0> = 0
    if (w[cur.front()].kind == K::creation || w[cur.back()].kind == K::annihilation) return;
  }
  for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
    if (w[cur[i]].kind == K::annihilation && w[cur[i + 1]].kind == K::creation) {
      // a c = c a + G(a - c)
      std::vector<int> swapped = cur;
      std::swap(swapped[i], swapped[i + 1]);
      wick_expand(w, swapped, pairs, vacuum, out);
      std::vector<int> contracted;
      contracted.reserve(cur.size() - 2);
      for (std::size_t j = 0; j < cur.size(); ++j)
        if (j != i && j != i + 1) contracted.push_back(cur[j]);
      pairs.emplace_back(cur[i], cur[i + 1]);
      wick_expand(w, contracted, pairs, vacuum, out);
      pairs.pop_back();
      return;
    }
  }
  if (vacuum && !cur.empty()) return;
  WickTerm t;
  t.pairings = pairs;
  std::sort(t.pairings.begin(), t.pairings.end());
  t.residue = cur;
  out.push_back(std::move(t));
}

}  // namespace detail

/// Normal-orders a word: every annihilator ends to the right of every creator.
inline std::vector<WickTerm> wick_reduce(const WickWord& w) {
  std::vector<int> cur(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) cur[i] = static_cast<int>(i);
  std::vector<std::pair<int, int>> pairs;
  std::vector<WickTerm> out;
  detail::wick_expand(w, cur, pairs, false, out);
  return out;
}

/// The terms of <0| w |0>: full pairings only.
inline std::vector<WickTerm> vacuum_terms(const WickWord& w) {
  std::vector<int> cur(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) cur[i] = static_cast<int>(i);
  std::vector<std::pair<int, int>> pairs;
  std::vector<WickTerm> out;
  detail::wick_expand(w, cur, pairs, true, out);
  return out;
}

// ---------------------------------------------------------------------------
// Rooted trees

/**
 * @brief A tree term of the series.
 *
 * The root is the phi slot at time 0; it has one child. Internal vertices carry
 * the nonlinearity (arity = number of children) and are integrated over time;
 * leaves are u slots at time t. Node 0 is the child of the root.
 */
struct RootedTree {
  struct Node {
    std::vector<int> children;
    bool leaf() const { return children.empty(); }
  };
  std::vector<Node> nodes;
  std::string shape;
  int vertices = 0;
  int leaves = 0;
  double automorphisms = 1.0;
  /// (-1)^vertices prod(arity!) / automorphisms
  double weight = 1.0;

  int sign() const { return vertices % 2 ? -1 : 1; }
};

namespace detail {

/// Canonical string: leaf "o", vertex "(" + sorted child strings + ")".
inline int parse_shape(const std::string& s, std::size_t& pos, RootedTree& t) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (s[pos] == 'o') {
    ++pos;
    ++t.leaves;
    return id;
  }
  if (s[pos] != '(') throw std::invalid_argument("bad tree shape '" + s + "'");
  ++pos;
  ++t.vertices;
  std::vector<int> kids;
  while (s[pos] != ')') kids.push_back(parse_shape(s, pos, t));
  ++pos;
  t.nodes[id].children = std::move(kids);
  return id;
}

/// Splits a vertex string into its child strings.
inline std::vector<std::string> child_shapes(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 1;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (depth == 0) {
      out.push_back(s.substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  return out;
}

inline double shape_automorphisms(const std::string& s) {
  if (s == "o") return 1.0;
  const auto kids = child_shapes(s);
  double a = 1.0;
  std::map<std::string, int> mult;
  for (const auto& k : kids) {
    a *= shape_automorphisms(k);
    ++mult[k];
  }
  for (const auto& [k, m] : mult)
    for (int j = 2; j <= m; ++j) a *= j;
  return a;
}

/// All canonical subtree strings with exactly k internal vertices and arities in Q.
inline const std::vector<std::string>& subtree_shapes(int k, const std::vector<int>& Q,
                                                      std::map<std::pair<int, std::vector<int>>, std::vector<std::string>>& memo) {
  auto key = std::make_pair(k, Q);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  std::set<std::string> shapes;
  if (k == 0) {
    shapes.insert("o");
  } else {
    for (int q : Q) {
      // multisets of q children whose vertex counts sum to k - 1, enumerated as nondecreasing shape lists
      std::vector<std::pair<int, std::string>> pool;
      for (int j = 0; j <= k - 1; ++j)
        for (const auto& s : subtree_shapes(j, Q, memo)) pool.emplace_back(j, s);
      std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
      std::vector<int> pick;
      std::function<void(std::size_t, int)> rec = [&](std::size_t from, int remaining) {
        if (static_cast<int>(pick.size()) == q) {
          if (remaining != 0) return;
          std::string s = "(";
          for (int i : pick) s += pool[i].second;
          shapes.insert(s + ")");
          return;
        }
        for (std::size_t i = from; i < pool.size(); ++i) {
          if (pool[i].first > remaining) continue;
          pick.push_back(static_cast<int>(i));
          rec(i, remaining - pool[i].first);
          pick.pop_back();
        }
      };
      rec(0, k - 1);
    }
  }
  return memo[key] = std::vector<std::string>(shapes.begin(), shapes.end());
}

}  // namespace detail

inline RootedTree tree_from_shape(const std::string& shape) {
  RootedTree t;
  std::size_t pos = 0;
  detail::parse_shape(shape, pos, t);
  if (pos != shape.size()) throw std::invalid_argument("trailing characters in tree shape '" + shape + "'");
  t.shape = shape;
  t.automorphisms = detail::shape_automorphisms(shape);
  double w = t.vertices % 2 ? -1.0 : 1.0;
  for (const auto& n : t.nodes)
    for (int j = 2; j <= static_cast<int>(n.children.size()); ++j) w *= j;
  t.weight = w / t.automorphisms;
  return t;
}

/// Trees with exactly `order` internal vertices whose arities are degrees of V.
inline std::vector<RootedTree> enumerate_trees(int order, const NonlinearitySpec& V) {
  if (order < 0) throw std::invalid_argument("tree order must be >= 0");
  std::vector<RootedTree> out;
  const auto Q = V.degrees();
  if (order > 0 && Q.empty()) return out;
  std::map<std::pair<int, std::vector<int>>, std::vector<std::string>> memo;
  for (const auto& s : detail::subtree_shapes(order, Q, memo)) out.push_back(tree_from_shape(s));
  return out;
}

/// Number of orderings of the vertices compatible with parent-before-child (hook length formula).
inline double increasing_labelings(const RootedTree& t) {
  std::vector<int> size(t.nodes.size(), 0);
  std::function<int(int)> count = [&](int v) {
    if (t.nodes[v].leaf()) return 0;
    int s = 1;
    for (int c : t.nodes[v].children) s += count(c);
    return size[v] = s;
  };
  count(0);
  double r = 1.0;
  for (int j = 2; j <= t.vertices; ++j) r *= j;
  for (int s : size)
    if (s > 0) r /= s;
  return r;
}

/// Text diagram, one line per node, children indented under their parent.
inline std::string tree_diagram(const RootedTree& t) {
  std::ostringstream os;
  os << "x (phi, time 0)\n";
  std::function<void(int, const std::string&, bool)> draw = [&](int v, const std::string& pad, bool last) {
    os << pad << (last ? "`-- " : "|-- ");
    if (t.nodes[v].leaf()) {
      os << "y (u, time t)\n";
      return;
    }
    os << "z (arity " << t.nodes[v].children.size() << ")\n";
    const auto& kids = t.nodes[v].children;
    for (std::size_t i = 0; i < kids.size(); ++i) draw(kids[i], pad + (last ? "    " : "|   "), i + 1 == kids.size());
  };
  draw(0, "", true);
  return os.str();
}

// ---------------------------------------------------------------------------
// Feynman-rule evaluation

struct TreeValue {
  double value = 0.0;
  /// value with nodes + 4, when the check was requested
  double refined = 0.0;
  bool checked = false;
  std::string warning;
};

namespace detail {

/// I^phi_0[z]: the Wronskian pairing of two linear solutions at time 0.
inline double wronskian_at_zero(const LinearSolution& z, const LinearSolution& phi) {
  const CauchyPair& a = z.data0();
  const CauchyPair& b = phi.data0();
  return integral_product(a.u0, b.u1) - integral_product(a.u1, b.u0);
}

class TreeEvaluator {
 public:
  TreeEvaluator(const RootedTree& tree, const LinearSolution& psi, const NonlinearitySpec& V, double t, int nodes,
                bool dealias)
      : tree_(tree), psi_(psi), V_(V), t_(t), rule_(gauss_legendre(nodes)), dealias_(dealias) {}

  /// Sum over the vertex time tau in [from, t] of the solution emitted by vertex v.
  LinearSolution integrate(int v, double from) const {
    const double half = 0.5 * (t_ - from);
    CauchyPair acc(psi_.grid());
    for (std::size_t j = 0; j < rule_.nodes.size(); ++j) {
      const double tau = from + half * (rule_.nodes[j] + 1.0);
      acc += (half * rule_.weights[j]) * emit(v, tau).data0();
    }
    return LinearSolution(std::move(acc));
  }

  /// V_q(child slices at tau) #_tau G for the vertex v placed at time tau.
  LinearSolution emit(int v, double tau) const {
    const auto& kids = tree_.nodes[v].children;
    std::vector<CauchyPair> slices;
    slices.reserve(kids.size());
    for (int c : kids) slices.push_back(tree_.nodes[c].leaf() ? psi_.at(tau) : integrate(c, tau).at(tau));
    std::vector<const CauchyPair*> args;
    for (const auto& s : slices) args.push_back(&s);
    return sharp(multilinear_nonlinearity(V_, args, dealias_), tau, 0);
  }

  /// The solution reaching the root.
  LinearSolution root() const { return tree_.nodes[0].leaf() ? psi_ : integrate(0, 0.0); }

 private:
  const RootedTree& tree_;
  const LinearSolution& psi_;
  const NonlinearitySpec& V_;
  double t_;
  const QuadratureRule& rule_;
  bool dealias_;
};

inline double tree_integral(const RootedTree& tree, const LinearSolution& psi, const LinearSolution& phi,
                            const NonlinearitySpec& V, double t, int nodes, bool dealias) {
  const TreeEvaluator ev(tree, psi, V, t, nodes, dealias);
  return tree.weight * wronskian_at_zero(ev.root(), phi);
}

}  // namespace detail

/**
 * @brief Feynman-rule value of one tree for data d = [u]_t and test solution phi.
 *
 * Leaves are slices of the linear solution sharing d at time t; each vertex at
 * time tau sends V_q(children) #_tau G upward, its children integrated over
 * [tau, t] by Gauss-Legendre; the root pairs with phi at time 0.
 */
inline TreeValue evaluate_tree(const RootedTree& tree, const CauchyPair& d, const LinearSolution& phi,
                               const NonlinearitySpec& V, double t, int nodes, bool check = false,
                               bool dealias = false) {
  require_same_grid(d.grid(), phi.grid());
  const LinearSolution psi = sharp_lr(d, t);
  TreeValue out;
  out.value = detail::tree_integral(tree, psi, phi, V, t, nodes, dealias);
  if (check && tree.vertices > 0) {
    out.checked = true;
    out.refined = detail::tree_integral(tree, psi, phi, V, t, nodes + 4, dealias);
    if (std::abs(out.refined - out.value) > 0.01 * std::abs(out.refined))
      out.warning = "tree quadrature changed by more than 1% under nodes + 4";
  }
  return out;
}

}  // namespace kgfock
