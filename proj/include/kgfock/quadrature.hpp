#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace kgfock {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Golub-Welsch), nodes ascending.
inline const QuadratureRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs n >= 1");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  // P_n(x) and its derivative by the three-term recurrence
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    return std::pair<double, double>{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  QuadratureRule rule;
  for (int k = 0; k < n; ++k) {
    double x = es.eigenvalues()[k];
    auto [p, dp] = legendre(x);
    x -= p / dp;
    dp = legendre(x).second;
    rule.nodes.push_back(x);
    rule.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

/**
 * @brief Composite Gauss-Legendre collocation on [a, b].
 *
 * Holds the nodes, the weights of the full integral, and the running-integral
 * matrix W with W(j, i) = integral from a to node j of the i-th Lagrange basis
 * polynomial of the panel containing node i.
 */
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  Eigen::MatrixXd running;
};

inline CompositeRule composite_gauss_legendre(double a, double b, int panels, int per_panel) {
  if (panels < 1) throw std::invalid_argument("need at least one panel");
  const auto& g = gauss_legendre(per_panel);
  const int N = panels * per_panel;
  CompositeRule out;
  out.nodes.resize(N);
  out.weights.resize(N);
  out.running = Eigen::MatrixXd::Zero(N, N);
  const double h = (b - a) / panels;
  // local integrals of Lagrange polynomials on [-1, x_j], exact with the same rule
  Eigen::MatrixXd local(per_panel, per_panel);
  auto lagrange = [&](int i, double x) {
    double v = 1.0;
    for (int k = 0; k < per_panel; ++k)
      if (k != i) v *= (x - g.nodes[k]) / (g.nodes[i] - g.nodes[k]);
    return v;
  };
  for (int j = 0; j < per_panel; ++j) {
    const double half = 0.5 * (g.nodes[j] + 1.0);
    for (int i = 0; i < per_panel; ++i) {
      double acc = 0.0;
      for (int k = 0; k < per_panel; ++k) acc += g.weights[k] * lagrange(i, -1.0 + half * (g.nodes[k] + 1.0));
      local(j, i) = half * acc;
    }
  }
  for (int p = 0; p < panels; ++p) {
    const double left = a + p * h;
    for (int j = 0; j < per_panel; ++j) {
      const int J = p * per_panel + j;
      out.nodes[J] = left + 0.5 * h * (g.nodes[j] + 1.0);
      out.weights[J] = 0.5 * h * g.weights[j];
      for (int q = 0; q < p; ++q)
        for (int i = 0; i < per_panel; ++i) out.running(J, q * per_panel + i) = 0.5 * h * g.weights[i];
      for (int i = 0; i < per_panel; ++i) out.running(J, p * per_panel + i) = 0.5 * h * local(j, i);
    }
  }
  return out;
}

}  // namespace kgfock
