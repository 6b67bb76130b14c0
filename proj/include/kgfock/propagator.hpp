#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spectral.hpp"

namespace kgfock {

/// Solution of the linear Klein-Gordon equation, stored by its Cauchy data at time 0.
class LinearSolution {
 public:
  LinearSolution() = default;
  explicit LinearSolution(CauchyPair data0) : data0_(std::move(data0)) {}

  const SpectralGrid& grid() const { return data0_.grid(); }
  const CauchyPair& data0() const { return data0_; }
  CauchyPair at(double t) const;
  double norm() const { return pair_norm(data0_); }

  LinearSolution& operator+=(const LinearSolution& o) {
    data0_ += o.data0_;
    return *this;
  }
  LinearSolution& operator-=(const LinearSolution& o) {
    data0_ -= o.data0_;
    return *this;
  }
  LinearSolution& operator*=(double a) {
    data0_ *= a;
    return *this;
  }
  friend LinearSolution operator+(LinearSolution a, const LinearSolution& b) { return a += b; }
  friend LinearSolution operator-(LinearSolution a, const LinearSolution& b) { return a -= b; }
  friend LinearSolution operator*(double a, LinearSolution s) { return s *= a; }

 private:
  CauchyPair data0_;
};

/// Mode-wise rotation of Cauchy data by the linear flow over time t.
inline CauchyPair evolve_linear(const CauchyPair& d, double t) {
  if (t == 0.0) return d;
  CauchyPair out(d.grid());
  const auto& g = d.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double e = g.eps(i);
    const double c = std::cos(e * t), s = std::sin(e * t);
    out.u0[i] = d.u0[i] * c + d.u1[i] * (s / e);
    out.u1[i] = -e * s * d.u0[i] + c * d.u1[i];
  }
  return out;
}

inline CauchyPair LinearSolution::at(double t) const { return evolve_linear(data0_, t); }

/// Fourier symbol of the Green kernel, (2 pi)^{-n/2} sin(eps t) / eps, at retained mode index i.
inline double green_hat(const SpectralGrid& g, double t, std::size_t i) {
  const double e = g.eps(i);
  return std::pow(2.0 * std::numbers::pi, -0.5 * g.dim()) * std::sin(e * t) / e;
}

namespace detail {

/// Re(i^j exp(i theta)) for integer j.
inline double rotated_real(int j, double theta) {
  switch (((j % 4) + 4) % 4) {
    case 0: return std::cos(theta);
    case 1: return -std::sin(theta);
    case 2: return -std::cos(theta);
    default: return std::sin(theta);
  }
}

/// The multiplier Re(i^{k-1} eps^{k-1} exp(i eps tau)).
inline double sharp_symbol(int k, double e, double tau) {
  return std::pow(e, k - 1) * rotated_real(k - 1, e * tau);
}

}  // namespace detail

/**
 * @brief The linear solution v #_t G^(k).
 *
 * At time x0 its position slice has coefficients Re(i^{k-1} eps^{k-1} e^{i eps (t - x0)}) v_k;
 * differentiating in x0 gives the velocity slice, which is minus the k+1 symbol.
 */
inline LinearSolution sharp(const SpectralField& v, double t, int k) {
  if (k < 0) throw std::invalid_argument("sharp needs k >= 0");
  const auto& g = v.grid();
  CauchyPair d(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (v[i] == cplx{}) continue;
    const double e = g.eps(i);
    d.u0[i] = detail::sharp_symbol(k, e, t) * v[i];
    d.u1[i] = -detail::sharp_symbol(k + 1, e, t) * v[i];
  }
  return LinearSolution(std::move(d));
}

/// The linear solution sharing the Cauchy data d at time t.
inline LinearSolution sharp_lr(const CauchyPair& d, double t) {
  LinearSolution a = sharp(d.u0, t, 1);
  a -= sharp(d.u1, t, 0);
  return a;
}

struct DuhamelCheck {
  CauchyPair derivative;
  CauchyPair source;
  double mismatch = 0.0;
};

/**
 * @brief Compare d/dt of t -> sharp_lr([u]_t, t) with (J|_t) #_t G at sample j.
 *
 * Samples are on a uniform grid t_i = t0 + i h. The derivative is the central
 * difference; with `richardson` the h and 2h central differences are combined.
 */
inline DuhamelCheck duhamel_source(const std::vector<SpectralField>& source_path,
                                   const std::vector<CauchyPair>& path, double t0, double h, std::size_t j,
                                   bool richardson = false) {
  const std::size_t reach = richardson ? 2 : 1;
  if (path.size() != source_path.size()) throw std::invalid_argument("path and source lengths differ");
  if (j < reach || j + reach >= path.size()) throw std::out_of_range("insufficient samples for the stencil");
  auto psi = [&](std::size_t i) { return sharp_lr(path[i], t0 + h * static_cast<double>(i)).data0(); };
  CauchyPair d1 = (0.5 / h) * (psi(j + 1) - psi(j - 1));
  if (richardson) {
    CauchyPair d2 = (0.25 / h) * (psi(j + 2) - psi(j - 2));
    d1 = (4.0 / 3.0) * d1 - (1.0 / 3.0) * d2;
  }
  DuhamelCheck out;
  out.source = sharp(source_path[j], t0 + h * static_cast<double>(j), 0).data0();
  out.mismatch = pair_norm(d1 - out.source);
  out.derivative = std::move(d1);
  return out;
}

}  // namespace kgfock
