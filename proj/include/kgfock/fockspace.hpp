#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "majorant.hpp"
#include "multiset.hpp"
#include "nonlinearity.hpp"
#include "propagator.hpp"
#include "spectral.hpp"

namespace kgfock {

using Coords = Eigen::VectorXd;

/**
 * @brief Orthonormal basis of the grid-representable linear solutions.
 *
 * Real modes are the constant, then cos and sin of every wavenumber in the
 * positive half of the band. Each real mode contributes a position element
 * (data (phi, 0)) and a velocity element (data (0, phi)), normalized in the
 * pair norm. Element a = 2 * mode + slot.
 */
class ModeBasis {
 public:
  explicit ModeBasis(const SpectralGrid& g) : grid_(g) {
    const std::size_t z = g.zero_index();
    K_ = 2 * static_cast<int>(1 + 2 * (g.size() - 1 - z));
    elements_.reserve(K_);
    for (int a = 0; a < K_; ++a) {
      Coords e = Coords::Zero(K_);
      e[a] = 1.0;
      elements_.push_back(synthesize(e));
    }
  }

  const SpectralGrid& grid() const { return grid_; }
  int size() const { return K_; }
  double sobolev() const { return grid_.sobolev(); }
  const LinearSolution& element(int a) const { return elements_[a]; }

  /// Grid index of the wavenumber behind element a, and whether it is the sine partner.
  std::pair<std::size_t, bool> mode_of(int a) const {
    const int rho = a / 2;
    if (rho == 0) return {grid_.zero_index(), false};
    return {grid_.zero_index() + 1 + (rho - 1) / 2, (rho - 1) % 2 == 1};
  }

  /// Calls emit(a, x_a) for every coordinate touched by nonzero coefficients of d.
  template <class Emit>
  void for_each_coord(const CauchyPair& d, Emit&& emit) const {
    const std::size_t z = grid_.zero_index();
    const double s = grid_.sobolev();
    const double half = std::sqrt(0.5 * grid_.volume());
    const double full = std::sqrt(grid_.volume());
    for (std::size_t i = z; i < grid_.size(); ++i) {
      const cplx c0 = d.u0[i], c1 = d.u1[i];
      if (c0 == cplx{} && c1 == cplx{}) continue;
      const double e = grid_.eps(i);
      const double w0 = std::pow(e, s + 1.0), w1 = std::pow(e, s);
      if (i == z) {
        emit(0, c0.real() * full * w0);
        emit(1, c1.real() * full * w1);
        continue;
      }
      const int rho = 1 + 2 * static_cast<int>(i - z - 1);
      emit(2 * rho, 2.0 * c0.real() * half * w0);
      emit(2 * rho + 1, 2.0 * c1.real() * half * w1);
      emit(2 * (rho + 1), -2.0 * c0.imag() * half * w0);
      emit(2 * (rho + 1) + 1, -2.0 * c1.imag() * half * w1);
    }
  }

  Coords coords(const CauchyPair& d) const {
    require_same_grid(grid_, d.grid());
    Coords x = Coords::Zero(K_);
    for_each_coord(d, [&](int a, double v) { x[a] = v; });
    return x;
  }
  Coords coords(const LinearSolution& phi) const { return coords(phi.data0()); }

  LinearSolution synthesize(const Coords& x) const {
    if (x.size() != K_) throw std::invalid_argument("coordinate vector has wrong length");
    const std::size_t z = grid_.zero_index();
    const double s = grid_.sobolev();
    const double half = std::sqrt(0.5 * grid_.volume());
    const double full = std::sqrt(grid_.volume());
    CauchyPair d(grid_);
    d.u0[z] = x[0] / (full * std::pow(grid_.eps(z), s + 1.0));
    d.u1[z] = x[1] / (full * std::pow(grid_.eps(z), s));
    for (std::size_t i = z + 1; i < grid_.size(); ++i) {
      const int rho = 1 + 2 * static_cast<int>(i - z - 1);
      const double e = grid_.eps(i);
      const double w0 = half * std::pow(e, s + 1.0), w1 = half * std::pow(e, s);
      const cplx c0(0.5 * x[2 * rho] / w0, -0.5 * x[2 * (rho + 1)] / w0);
      const cplx c1(0.5 * x[2 * rho + 1] / w1, -0.5 * x[2 * (rho + 1) + 1] / w1);
      d.u0[i] = c0;
      d.u1[i] = c1;
      d.u0[grid_.mirror(i)] = std::conj(c0);
      d.u1[grid_.mirror(i)] = std::conj(c1);
    }
    return LinearSolution(std::move(d));
  }

 private:
  SpectralGrid grid_;
  int K_ = 0;
  std::vector<LinearSolution> elements_;
};

using BasisPtr = std::shared_ptr<const ModeBasis>;

inline BasisPtr make_basis(const SpectralGrid& g) { return std::make_shared<const ModeBasis>(g); }

/**
 * @brief Polynomial functional f(phi) = sum_p f_p(phi^p) with symmetric kernels.
 *
 * Kernel p stores the independent entries c_p[i_1 <= ... <= i_p] in
 * lexicographic order; an empty kernel stands for zero.
 */
class PolyFunctional {
 public:
  PolyFunctional() = default;
  PolyFunctional(BasisPtr basis, int cap) : basis_(std::move(basis)), kernels_(cap + 1) {
    if (cap < 0) throw std::invalid_argument("degree cap must be >= 0");
  }

  static PolyFunctional vacuum(BasisPtr basis, int cap) {
    PolyFunctional f(std::move(basis), cap);
    f.kernel_mut(0)[0] = 1.0;
    return f;
  }
  static PolyFunctional linear(BasisPtr basis, int cap, const Coords& a) { return pure_power(std::move(basis), cap, a, 1); }
  /// <a, .>^p
  static PolyFunctional pure_power(BasisPtr basis, int cap, const Coords& a, int p) {
    PolyFunctional f(std::move(basis), std::max(cap, p));
    auto& c = f.kernel_mut(p);
    const auto& idx = multiset_index(f.K(), p);
    std::vector<int> m = idx.first();
    std::size_t r = 0;
    do {
      double v = 1.0;
      for (int j : m) v *= a[j];
      c[r++] = v;
    } while (idx.next(m));
    return f;
  }

  const ModeBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  int cap() const { return static_cast<int>(kernels_.size()) - 1; }
  int K() const { return basis_->size(); }

  bool has(int p) const { return p >= 0 && p <= cap() && !kernels_[p].empty(); }
  const std::vector<double>& kernel(int p) const { return kernels_.at(p); }
  std::vector<double>& kernel_mut(int p) {
    if (p > cap()) kernels_.resize(p + 1);
    auto& c = kernels_[p];
    if (c.empty()) c.assign(multiset_index(K(), p).size(), 0.0);
    return c;
  }
  void clear(int p) {
    if (p <= cap()) kernels_[p].clear();
  }

  /// Entry c_p at an arbitrary (unsorted) index tuple.
  double entry(std::vector<int> idx) const {
    const int p = static_cast<int>(idx.size());
    if (!has(p)) return 0.0;
    std::sort(idx.begin(), idx.end());
    return kernels_[p][multiset_index(K(), p).rank(idx)];
  }

  int max_degree() const {
    for (int p = cap(); p >= 0; --p)
      if (has(p))
        for (double v : kernels_[p])
          if (v != 0.0) return p;
    return -1;
  }

  PolyFunctional with_cap(int cap) const {
    PolyFunctional g(basis_, cap);
    for (int p = 0; p <= std::min(cap, this->cap()); ++p) g.kernels_[p] = kernels_[p];
    return g;
  }

  PolyFunctional& axpy(double a, const PolyFunctional& o) {
    if (basis_ != o.basis_ && !(basis_->grid() == o.basis_->grid())) throw GridError("basis mismatch");
    for (int p = 0; p <= o.cap(); ++p) {
      if (!o.has(p) || a == 0.0) continue;
      auto& c = kernel_mut(p);
      const auto& d = o.kernels_[p];
      for (std::size_t i = 0; i < c.size(); ++i) c[i] += a * d[i];
    }
    return *this;
  }
  PolyFunctional& operator+=(const PolyFunctional& o) { return axpy(1.0, o); }
  PolyFunctional& operator-=(const PolyFunctional& o) { return axpy(-1.0, o); }
  PolyFunctional& operator*=(double a) {
    for (auto& c : kernels_)
      for (double& v : c) v *= a;
    return *this;
  }
  friend PolyFunctional operator+(PolyFunctional a, const PolyFunctional& b) { return a += b; }
  friend PolyFunctional operator-(PolyFunctional a, const PolyFunctional& b) { return a -= b; }
  friend PolyFunctional operator*(double a, PolyFunctional f) { return f *= a; }

 private:
  BasisPtr basis_;
  std::vector<std::vector<double>> kernels_;
};

/// f_p(x^p) for one kernel.
inline double evaluate_kernel(const std::vector<double>& c, int p, int K, const Coords& x) {
  if (p == 0) return c[0];
  const auto& idx = multiset_index(K, p);
  std::vector<int> m = idx.first();
  double acc = 0.0;
  std::size_t r = 0;
  do {
    const double v = c[r++];
    if (v == 0.0) continue;
    double prod = v * MultisetIndex::multinomial(m.data(), p);
    for (int j : m) prod *= x[j];
    acc += prod;
  } while (idx.next(m));
  return acc;
}

inline double evaluate(const PolyFunctional& f, const Coords& x) {
  if (x.size() != f.K()) throw std::invalid_argument("coordinate vector does not match the basis");
  double acc = 0.0;
  for (int p = 0; p <= f.cap(); ++p)
    if (f.has(p)) acc += evaluate_kernel(f.kernel(p), p, f.K(), x);
  return acc;
}

/// Gradient of x -> f_p(x^p).
inline Coords kernel_gradient(const std::vector<double>& c, int p, int K, const Coords& x) {
  Coords g = Coords::Zero(K);
  if (p == 0) return g;
  const auto& idx = multiset_index(K, p);
  std::vector<int> m = idx.first();
  std::size_t r = 0;
  do {
    const double v = c[r++];
    if (v == 0.0) continue;
    const double w = v * MultisetIndex::multinomial(m.data(), p);
    for (int j = 0; j < p; ++j) {
      double prod = w;
      for (int i = 0; i < p; ++i)
        if (i != j) prod *= x[m[i]];
      g[m[j]] += prod;
    }
  } while (idx.next(m));
  return g;
}

enum class NormMode { exact, upper, sampled_lower };

inline std::string to_string(NormMode m) {
  switch (m) {
    case NormMode::exact: return "exact";
    case NormMode::upper: return "upper";
    default: return "sampled-lower";
  }
}

namespace detail {

inline Eigen::MatrixXd quadratic_matrix(const std::vector<double>& c, int K) {
  Eigen::MatrixXd A(K, K);
  const auto& idx = multiset_index(K, 2);
  for (int a = 0; a < K; ++a)
    for (int b = a; b < K; ++b) {
      const int m[2] = {a, b};
      A(a, b) = A(b, a) = c[idx.rank(m)];
    }
  return A;
}

inline double frobenius(const std::vector<double>& c, int p, int K) {
  if (p == 0) return std::abs(c[0]);
  const auto& idx = multiset_index(K, p);
  std::vector<int> m = idx.first();
  double acc = 0.0;
  std::size_t r = 0;
  do {
    const double v = c[r++];
    acc += MultisetIndex::multinomial(m.data(), p) * v * v;
  } while (idx.next(m));
  return std::sqrt(acc);
}

/// Best |f_p(x^p)| over unit x found by sign-corrected power ascent from random starts.
inline double sampled_kernel_norm(const std::vector<double>& c, int p, int K, int restarts, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = 0.0;
  for (int trial = 0; trial < restarts; ++trial) {
    Coords x(K);
    for (int a = 0; a < K; ++a) x[a] = normal(rng);
    x.normalize();
    double prev = -1.0;
    for (int it = 0; it < 2000; ++it) {
      const double val = evaluate_kernel(c, p, K, x);
      best = std::max(best, std::abs(val));
      if (std::abs(std::abs(val) - prev) <= 1e-15 * std::max(1.0, std::abs(val))) break;
      prev = std::abs(val);
      Coords g = kernel_gradient(c, p, K, x);
      if (val < 0.0) g = -g;
      const double n = g.norm();
      if (n == 0.0) break;
      x = g / n;
    }
  }
  return best;
}

}  // namespace detail

/// The graded norm [[f_p]] of one kernel under the requested mode.
inline double kernel_norm(const PolyFunctional& f, int p, NormMode mode, int restarts = 1000) {
  if (!f.has(p)) return 0.0;
  const auto& c = f.kernel(p);
  const int K = f.K();
  if (p == 0) return std::abs(c[0]);
  if (p == 1) return Eigen::Map<const Eigen::VectorXd>(c.data(), K).norm();
  if (mode == NormMode::sampled_lower) return detail::sampled_kernel_norm(c, p, K, restarts, 0x5eedu + p);
  if (p == 2) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::quadratic_matrix(c, K), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (mode == NormMode::exact) {
    for (double v : c)
      if (v != 0.0) throw std::domain_error("exact norm is only available up to degree 2");
    return 0.0;
  }
  return detail::frobenius(c, p, K);
}

struct NormReport {
  double value = 0.0;
  NormMode mode = NormMode::upper;
};

/// N_r^(k)(f) = sum_p p(p-1)...(p-k+1) [[f_p]] r^{p-k}; k = 0 gives N_r.
inline NormReport norm_Nr(const PolyFunctional& f, double r, NormMode mode, int k = 0, int restarts = 1000) {
  if (r < 0.0) throw std::invalid_argument("norm_Nr needs r >= 0");
  NormReport rep;
  rep.mode = mode;
  for (int p = k; p <= f.cap(); ++p) {
    if (!f.has(p)) continue;
    double falling = 1.0;
    for (int j = 0; j < k; ++j) falling *= p - j;
    rep.value += falling * kernel_norm(f, p, mode, restarts) * std::pow(r, p - k);
  }
  return rep;
}

/// Directional derivative: kernel p-1 of the result is p times c_p contracted with psi in one slot.
inline PolyFunctional derivative_along(const PolyFunctional& f, const Coords& psi) {
  PolyFunctional g(f.basis_ptr(), f.cap());
  const int K = f.K();
  for (int p = 1; p <= f.cap(); ++p) {
    if (!f.has(p)) continue;
    const auto& c = f.kernel(p);
    const auto& ext = extension_table(K, p - 1);
    auto& out = g.kernel_mut(p - 1);
    for (std::size_t R = 0; R < out.size(); ++R) {
      const std::uint32_t* row = ext.row(R);
      double acc = 0.0;
      for (int a = 0; a < K; ++a) acc += psi[a] * c[row[a]];
      out[R] = p * acc;
    }
  }
  return g;
}

/// f times the linear functional phi -> <ell, phi>, symmetrized; the cap grows if needed.
inline PolyFunctional multiply_linear(const PolyFunctional& f, const Coords& ell) {
  const int top = std::max(f.max_degree(), 0);
  PolyFunctional g(f.basis_ptr(), std::max(f.cap(), top + 1));
  const int K = f.K();
  for (int p = 0; p <= f.cap(); ++p) {
    if (!f.has(p)) continue;
    const auto& c = f.kernel(p);
    const auto& ext = extension_table(K, p);
    auto& out = g.kernel_mut(p + 1);
    for (std::size_t R = 0; R < c.size(); ++R) {
      if (c[R] == 0.0) continue;
      for (int a = 0; a < K; ++a)
        out[ext.rank(R, a)] += ell[a] * c[R] * ext.multiplicity(R, a) / (p + 1.0);
    }
  }
  return g;
}

/// Coordinates of the functional psi -> integral of psi(t, .) * phi1.
inline Coords position_smearing(const ModeBasis& basis, const SpectralField& phi1, double t) {
  Coords ell(basis.size());
  for (int a = 0; a < basis.size(); ++a) ell[a] = integral_product(basis.element(a).at(t).u0, phi1);
  return ell;
}

/// Coordinates of the functional psi -> integral of d_t psi(t, .) * phi0.
inline Coords velocity_smearing(const ModeBasis& basis, const SpectralField& phi0, double t) {
  Coords ell(basis.size());
  for (int a = 0; a < basis.size(); ++a) ell[a] = integral_product(basis.element(a).at(t).u1, phi0);
  return ell;
}

inline PolyFunctional creation_smeared(const PolyFunctional& f, const SpectralField& phi1, double t) {
  return multiply_linear(f, position_smearing(f.basis(), phi1, t));
}

inline PolyFunctional creation_smeared_dt(const PolyFunctional& f, const SpectralField& phi0, double t) {
  return multiply_linear(f, velocity_smearing(f.basis(), phi0, t));
}

/// Coordinates of psi -> int (psi d_t phi - d_t psi phi) at time t.
inline Coords wronskian_smearing(const ModeBasis& basis, const LinearSolution& phi, double t) {
  const CauchyPair d = phi.at(t);
  return position_smearing(basis, d.u1, t) - velocity_smearing(basis, d.u0, t);
}

/// Multiplication by the Wronskian pairing with phi at time t.
inline PolyFunctional creation_pair(const PolyFunctional& f, const LinearSolution& phi, double t) {
  return multiply_linear(f, wronskian_smearing(f.basis(), phi, t));
}

/// The linear functional psi -> I^phi_0[psi] built from the vacuum.
inline PolyFunctional f_phi(const BasisPtr& basis, int cap, const LinearSolution& phi) {
  return creation_pair(PolyFunctional::vacuum(basis, cap), phi, 0.0);
}

inline PolyFunctional apply_U(const PolyFunctional& f, const CauchyPair& d, double t) {
  return derivative_along(f, f.basis().coords(sharp_lr(d, t)));
}

/// f(. + psi), the finite exponential series of the derivative along psi.
inline PolyFunctional translate(const PolyFunctional& f, const Coords& psi) {
  PolyFunctional acc = f;
  PolyFunctional term = f;
  const int top = f.max_degree();
  for (int k = 1; k <= top; ++k) {
    term = derivative_along(term, psi);
    term *= 1.0 / k;
    acc += term;
  }
  return acc;
}

inline PolyFunctional exp_U(const PolyFunctional& f, const CauchyPair& d, double t) {
  return translate(f, f.basis().coords(sharp_lr(d, t)));
}

struct CoVector {
  enum class Kind { vacuum, evaluation };
  Kind kind = Kind::vacuum;
  Coords point;

  static CoVector vacuum() { return {}; }
  static CoVector evaluation(Coords x) { return {Kind::evaluation, std::move(x)}; }
  /// <[u]_t| : evaluation at the linear solution sharing the data d at time t.
  static CoVector at_data(const ModeBasis& basis, const CauchyPair& d, double t) {
    return evaluation(basis.coords(sharp_lr(d, t)));
  }
};

inline double pair(const CoVector& c, const PolyFunctional& f) {
  if (c.kind == CoVector::Kind::vacuum) return f.has(0) ? f.kernel(0)[0] : 0.0;
  return evaluate(f, c.point);
}

/**
 * @brief Vertex tensors of V at time t in basis coordinates.
 *
 * Column Q (a sorted q-tuple of basis indices) of block q holds the
 * coordinates of V_q(e_Q1|_t, ..., e_Qq|_t) #_t G.
 */
class VertexOperator {
 public:
  VertexOperator(BasisPtr basis, const NonlinearitySpec& V, double t, bool dealias = false)
      : basis_(std::move(basis)), V_(V), t_(t) {
    const ModeBasis& B = *basis_;
    const int K = B.size();
    std::vector<CauchyPair> slices;
    slices.reserve(K);
    for (int a = 0; a < K; ++a) slices.push_back(B.element(a).at(t));
    for (int q : V.degrees()) {
      const auto& idx = multiset_index(K, q);
      std::vector<Eigen::Triplet<double>> trip;
      std::vector<int> Q = idx.first();
      std::size_t col = 0;
      std::vector<const CauchyPair*> args(q);
      do {
        for (int j = 0; j < q; ++j) args[j] = &slices[Q[j]];
        const SpectralField v = multilinear_nonlinearity(V, args, dealias);
        const LinearSolution lin = sharp(v, t, 0);
        B.for_each_coord(lin.data0(), [&](int a, double x) {
          if (x != 0.0) trip.emplace_back(a, static_cast<int>(col), x);
        });
        ++col;
      } while (idx.next(Q));
      Eigen::SparseMatrix<double> M(K, static_cast<int>(idx.size()));
      M.setFromTriplets(trip.begin(), trip.end());
      blocks_.push_back({q, std::move(M)});
    }
  }

  const BasisPtr& basis() const { return basis_; }
  const NonlinearitySpec& nonlinearity() const { return V_; }
  double time() const { return t_; }
  struct Block {
    int q;
    Eigen::SparseMatrix<double> tensor;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  BasisPtr basis_;
  NonlinearitySpec V_;
  double t_;
  std::vector<Block> blocks_;
};

struct DResult {
  PolyFunctional value;
  std::vector<std::pair<int, int>> dropped;
  double dropped_bound = 0.0;
};

namespace detail {

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int j = 1; j <= k; ++j) b = b * (n - k + j) / j;
  return b;
}

constexpr std::size_t kMergeTableLimit = std::size_t(1) << 24;

}  // namespace detail

/**
 * @brief (D f)(phi) = Df(phi)[V([phi]_t) #_t G], truncated at the cap of f.
 *
 * Degree p and vertex degree q produce degree k = p + q - 1 with entries
 * (p / C(k,q)) sum over q-position subsets S of sum_a B_q[a; m_S] c_p[a, m_rest].
 */
inline DResult apply_D(const PolyFunctional& f, const VertexOperator& op) {
  DResult out{PolyFunctional(f.basis_ptr(), f.cap()), {}, 0.0};
  const int K = f.K();
  const int cap = f.cap();
  std::vector<double> bounds;
  for (int p = 1; p <= cap; ++p) {
    if (!f.has(p)) continue;
    const auto& c = f.kernel(p);
    for (const auto& blk : op.blocks()) {
      const int q = blk.q;
      const int k = p + q - 1;
      if (k > cap) {
        out.dropped.emplace_back(p, q);
        if (bounds.empty()) bounds = majorant_of(op.nonlinearity(), f.basis().grid()).coeffs;
        out.dropped_bound += p * detail::frobenius(c, p, K) * bounds[q];
        continue;
      }
      const auto& ext = extension_table(K, p - 1);
      const std::size_t rows = multiset_index(K, p - 1).size();
      Eigen::MatrixXd Vm(rows, K);
      for (std::size_t R = 0; R < rows; ++R) {
        const std::uint32_t* row = ext.row(R);
        for (int a = 0; a < K; ++a) Vm(R, a) = c[row[a]];
      }
      const Eigen::MatrixXd M = Vm * blk.tensor;
      const double coef = p / detail::binomial(k, q);
      auto& g = out.value.kernel_mut(k);
      const std::size_t cols = static_cast<std::size_t>(M.cols());
      if (rows * cols <= detail::kMergeTableLimit) {
        const auto& mt = merge_table(K, p - 1, q);
        for (std::size_t R = 0; R < rows; ++R) {
          const std::uint32_t* rk = mt.rank_row(R);
          const float* wt = mt.weight_row(R);
          for (std::size_t Q = 0; Q < cols; ++Q) g[rk[Q]] += coef * wt[Q] * M(R, Q);
        }
      } else {
        const auto& iR = multiset_index(K, p - 1);
        const auto& iQ = multiset_index(K, q);
        const auto& iM = multiset_index(K, k);
        std::vector<int> Rv = iR.first(), m(k);
        std::size_t R = 0;
        do {
          std::vector<int> Qv = iQ.first();
          std::size_t Q = 0;
          do {
            std::merge(Rv.begin(), Rv.end(), Qv.begin(), Qv.end(), m.begin());
            double w = 1.0;
            for (std::size_t j = 0; j < Qv.size();) {
              std::size_t e = j;
              while (e < Qv.size() && Qv[e] == Qv[j]) ++e;
              const int inM = static_cast<int>(std::count(m.begin(), m.end(), Qv[j]));
              for (int i = 0; i < static_cast<int>(e - j); ++i) w = w * (inM - i) / (i + 1);
              j = e;
            }
            g[iM.rank(m)] += coef * w * M(R, Q);
            ++Q;
          } while (iQ.next(Qv));
          ++R;
        } while (iR.next(Rv));
      }
    }
  }
  return out;
}

inline DResult apply_D(const PolyFunctional& f, const NonlinearitySpec& V, double t, bool dealias = false) {
  return apply_D(f, VertexOperator(f.basis_ptr(), V, t, dealias));
}

}  // namespace kgfock
