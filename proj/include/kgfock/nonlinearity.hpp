#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectral.hpp"

namespace kgfock {

/// c * u^{p_0} (d_1 u)^{p_1} ... (d_n u)^{p_n} (d_t u)^{p_{n+1}}.
struct Monomial {
  double coef = 1.0;
  std::vector<int> powers;

  int degree() const { return std::accumulate(powers.begin(), powers.end(), 0); }
};

/// Polynomial nonlinearity lambda * sum of monomials in (u, grad u, du/dt).
class NonlinearitySpec {
 public:
  NonlinearitySpec() = default;
  NonlinearitySpec(int dim, std::vector<Monomial> monomials, double lambda)
      : dim_(dim), monomials_(std::move(monomials)), lambda_(lambda) {
    for (const auto& mono : monomials_) {
      if (static_cast<int>(mono.powers.size()) != dim_ + 2)
        throw std::invalid_argument("monomial needs n + 2 powers (u, gradient, time derivative)");
      for (int p : mono.powers)
        if (p < 0) throw std::invalid_argument("negative monomial power");
      if (mono.degree() == 0) throw std::invalid_argument("nonlinearity must vanish at 0 (constant term)");
    }
  }

  /// lambda * u^q.
  static NonlinearitySpec power(int dim, int q, double lambda) {
    Monomial mono{1.0, std::vector<int>(dim + 2, 0)};
    mono.powers[0] = q;
    return NonlinearitySpec(dim, {mono}, lambda);
  }

  int dim() const { return dim_; }
  double lambda() const { return lambda_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }
  bool is_zero() const { return lambda_ == 0.0 || monomials_.empty(); }

  NonlinearitySpec with_lambda(double lambda) const { return NonlinearitySpec(dim_, monomials_, lambda); }

  std::vector<int> degrees() const {
    std::vector<int> q;
    if (lambda_ == 0.0) return q;
    for (const auto& mono : monomials_)
      if (mono.coef != 0.0) q.push_back(mono.degree());
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    return q;
  }
  int max_degree() const {
    auto q = degrees();
    return q.empty() ? 0 : q.back();
  }
  bool uses_velocity() const {
    for (const auto& mono : monomials_)
      if (mono.powers.back() > 0) return true;
    return false;
  }
  bool potential_form() const {
    for (const auto& mono : monomials_)
      if (mono.degree() != mono.powers[0]) return false;
    return true;
  }

 private:
  int dim_ = 1;
  std::vector<Monomial> monomials_;
  double lambda_ = 0.0;
};

/// Parses "c:p0,p1,...; c:..." with n + 2 powers per monomial.
inline std::vector<Monomial> parse_monomials(const std::string& text, int dim) {
  std::vector<Monomial> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("monomial '" + item + "' lacks ':'");
    Monomial mono;
    mono.coef = std::stod(item.substr(0, colon));
    std::stringstream pw(item.substr(colon + 1));
    std::string tok;
    while (std::getline(pw, tok, ',')) mono.powers.push_back(std::stoi(tok));
    if (static_cast<int>(mono.powers.size()) != dim + 2)
      throw std::invalid_argument("monomial '" + item + "' needs n + 2 powers");
    out.push_back(std::move(mono));
  }
  return out;
}

inline std::string format_monomials(const std::vector<Monomial>& monos) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t j = 0; j < monos.size(); ++j) {
    if (j) os << "; ";
    os << monos[j].coef << ':';
    for (std::size_t k = 0; k < monos[j].powers.size(); ++k) os << (k ? "," : "") << monos[j].powers[k];
  }
  return os.str();
}

namespace detail {

/// Slot values (u, d_1 u, ..., d_n u, du/dt) of a Cauchy slice, derivatives built on demand.
class SlotCache {
 public:
  explicit SlotCache(const CauchyPair& d) : d_(d), grads_(d.grid().dim()), have_(d.grid().dim(), false) {}

  const SpectralField& slot(int k) {
    const int n = d_.grid().dim();
    if (k == 0) return d_.u0;
    if (k == n + 1) return d_.u1;
    if (!have_[k - 1]) {
      grads_[k - 1] = derivative(d_.u0, k - 1);
      have_[k - 1] = true;
    }
    return grads_[k - 1];
  }

 private:
  const CauchyPair& d_;
  std::vector<SpectralField> grads_;
  std::vector<bool> have_;
};

inline std::vector<int> slot_list(const Monomial& mono) {
  std::vector<int> slots;
  for (std::size_t k = 0; k < mono.powers.size(); ++k)
    for (int j = 0; j < mono.powers[k]; ++j) slots.push_back(static_cast<int>(k));
  return slots;
}

inline double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

}  // namespace detail

/// V(d) with a single Galerkin projection per monomial.
inline SpectralField evaluate_nonlinearity(const NonlinearitySpec& V, const CauchyPair& d, bool dealias = false) {
  SpectralField out(d.grid());
  if (V.is_zero()) return out;
  detail::SlotCache cache(d);
  for (const auto& mono : V.monomials()) {
    if (mono.coef == 0.0) continue;
    std::vector<const SpectralField*> factors;
    for (int k : detail::slot_list(mono)) factors.push_back(&cache.slot(k));
    out += (V.lambda() * mono.coef) * product(factors, dealias);
  }
  return out;
}

/**
 * @brief Symmetric q-linear part V_q(h_1, ..., h_q).
 *
 * Each degree-q monomial is polarized: its slot types are distributed over the
 * inputs in every distinct arrangement and averaged, so that V_q(h,...,h)
 * equals the degree-q part of V(h).
 */
inline SpectralField multilinear_nonlinearity(const NonlinearitySpec& V, const std::vector<const CauchyPair*>& slices,
                                              bool dealias = false) {
  if (slices.empty()) throw std::invalid_argument("multilinear_nonlinearity needs at least one slice");
  const int q = static_cast<int>(slices.size());
  SpectralField out(slices.front()->grid());
  if (V.is_zero()) return out;
  std::vector<detail::SlotCache> caches;
  caches.reserve(slices.size());
  for (const auto* s : slices) caches.emplace_back(*s);
  for (const auto& mono : V.monomials()) {
    if (mono.coef == 0.0 || mono.degree() != q) continue;
    std::vector<int> types = detail::slot_list(mono);
    double weight = 1.0;
    for (int p : mono.powers) weight *= detail::factorial(p);
    weight /= detail::factorial(q);
    std::sort(types.begin(), types.end());
    SpectralField acc(out.grid());
    do {
      std::vector<const SpectralField*> factors;
      for (int j = 0; j < q; ++j) factors.push_back(&caches[j].slot(types[j]));
      acc += product(factors, dealias);
    } while (std::next_permutation(types.begin(), types.end()));
    out += (V.lambda() * mono.coef * weight) * acc;
  }
  return out;
}

}  // namespace kgfock
