#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <unsupported/Eigen/FFT>

namespace kgfock {

using cplx = std::complex<double>;

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * @brief Periodic Fourier grid on [0,L)^n.
 *
 * Retained wavenumbers are the integer vectors k with |k_d| <= M/2 - 1 in
 * every direction; the Nyquist line is dropped so that every retained mode has
 * its mirror -k retained as well. Modes are laid out row-major with offset
 * M/2 - 1, which makes the mirror of index i equal to size() - 1 - i.
 */
class SpectralGrid {
 public:
  SpectralGrid() = default;

  SpectralGrid(int n, int M, double L, double mass, double s)
      : n_(n), M_(M), L_(L), mass_(mass), s_(s) {
    if (n != 1 && n != 2) throw GridError("grid dimension must be 1 or 2");
    if (M < 4 || M % 2 != 0) throw GridError("modes per dimension must be even and >= 4");
    if (!(L > 0.0)) throw GridError("period must be positive");
    if (!(mass > 0.0)) throw GridError("mass must be positive");
    auto t = std::make_shared<Tables>();
    const int N = half_band();
    const std::size_t count = size();
    t->eps.resize(count);
    t->wave.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::array<int, 2> k{0, 0};
      if (n == 1) {
        k[0] = static_cast<int>(i) - N;
      } else {
        k[0] = static_cast<int>(i / side()) - N;
        k[1] = static_cast<int>(i % side()) - N;
      }
      t->wave[i] = k;
      double x2 = 0.0;
      for (int d = 0; d < n; ++d) {
        const double x = 2.0 * std::numbers::pi / L * k[d];
        x2 += x * x;
      }
      t->eps[i] = std::sqrt(mass * mass + x2);
    }
    tab_ = std::move(t);
  }

  int dim() const { return n_; }
  int modes_per_dim() const { return M_; }
  double period() const { return L_; }
  double mass() const { return mass_; }
  double sobolev() const { return s_; }

  int half_band() const { return M_ / 2 - 1; }
  int side() const { return 2 * half_band() + 1; }
  std::size_t size() const { return n_ == 1 ? side() : static_cast<std::size_t>(side()) * side(); }

  const std::array<int, 2>& wavenumber(std::size_t i) const { return tab_->wave[i]; }
  double eps(std::size_t i) const { return tab_->eps[i]; }
  double xi(std::size_t i, int d) const { return 2.0 * std::numbers::pi / L_ * tab_->wave[i][d]; }
  std::size_t mirror(std::size_t i) const { return size() - 1 - i; }
  std::size_t zero_index() const { return (size() - 1) / 2; }

  bool in_band(const std::array<int, 2>& k) const {
    const int N = half_band();
    for (int d = 0; d < n_; ++d)
      if (k[d] < -N || k[d] > N) return false;
    return true;
  }
  std::size_t index_of(const std::array<int, 2>& k) const {
    const int N = half_band();
    if (n_ == 1) return static_cast<std::size_t>(k[0] + N);
    return static_cast<std::size_t>(k[0] + N) * side() + static_cast<std::size_t>(k[1] + N);
  }

  /// L^n, the torus volume.
  double volume() const { return std::pow(L_, n_); }
  /// (L/M)^n, the sample quadrature weight.
  double weight() const { return std::pow(L_ / M_, n_); }
  std::size_t samples() const { return n_ == 1 ? M_ : static_cast<std::size_t>(M_) * M_; }

  friend bool operator==(const SpectralGrid& a, const SpectralGrid& b) {
    return a.n_ == b.n_ && a.M_ == b.M_ && a.L_ == b.L_ && a.mass_ == b.mass_ && a.s_ == b.s_;
  }

 private:
  struct Tables {
    std::vector<double> eps;
    std::vector<std::array<int, 2>> wave;
  };
  int n_ = 1;
  int M_ = 0;
  double L_ = 0.0;
  double mass_ = 1.0;
  double s_ = 1.0;
  std::shared_ptr<const Tables> tab_;
};

inline void require_same_grid(const SpectralGrid& a, const SpectralGrid& b) {
  if (!(a == b)) throw GridError("grid metadata mismatch");
}

/// Real field stored by its Fourier coefficients c_k, f(x) = sum_k c_k exp(i xi_k . x).
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const SpectralGrid& g) : grid_(g), c_(g.size(), cplx{}) {}
  SpectralField(const SpectralGrid& g, std::vector<cplx> coeffs) : grid_(g), c_(std::move(coeffs)) {
    if (c_.size() != g.size()) throw GridError("coefficient count does not match grid");
  }

  const SpectralGrid& grid() const { return grid_; }
  const std::vector<cplx>& coeffs() const { return c_; }
  std::vector<cplx>& coeffs() { return c_; }
  cplx operator[](std::size_t i) const { return c_[i]; }
  cplx& operator[](std::size_t i) { return c_[i]; }
  std::size_t size() const { return c_.size(); }

  /// max |c_k - conj(c_{-k})|, zero for a real field.
  double hermitian_defect() const {
    double d = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i)
      d = std::max(d, std::abs(c_[i] - std::conj(c_[grid_.mirror(i)])));
    return d;
  }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& v : c_) v *= a;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double a, SpectralField f) { return f *= a; }
  friend SpectralField operator-(SpectralField f) { return f *= -1.0; }

 private:
  SpectralGrid grid_;
  std::vector<cplx> c_;
};

/// Constant field with value c.
inline SpectralField constant_field(const SpectralGrid& g, double c) {
  SpectralField f(g);
  f[g.zero_index()] = c;
  return f;
}

/// cos(xi_k . x) (or sin when `sine` is set) for a retained nonzero wavenumber.
inline SpectralField trig_mode(const SpectralGrid& g, const std::array<int, 2>& k, bool sine = false) {
  if (!g.in_band(k)) throw GridError("wavenumber outside the retained band");
  SpectralField f(g);
  const std::size_t i = g.index_of(k);
  if (i == g.zero_index()) {
    if (!sine) f[i] = 1.0;
    return f;
  }
  f[i] += sine ? cplx(0.0, -0.5) : cplx(0.5, 0.0);
  f[g.mirror(i)] += sine ? cplx(0.0, 0.5) : cplx(0.5, 0.0);
  return f;
}

/// Dirichlet kernel centred at x: the bandlimited Dirac mass, with integral against g equal to g(x).
inline SpectralField dirichlet_kernel(const SpectralGrid& g, const std::array<double, 2>& x) {
  SpectralField f(g);
  const double inv_vol = 1.0 / g.volume();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double phase = 0.0;
    for (int d = 0; d < g.dim(); ++d) phase += g.xi(i, d) * x[d];
    f[i] = inv_vol * std::polar(1.0, -phase);
  }
  return f;
}

inline double hs_norm_squared(const SpectralField& f, double s) {
  const auto& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::pow(g.eps(i), 2.0 * s) * std::norm(f[i]);
  return g.volume() * acc;
}

/// Discrete H^s norm, L^{n/2} (sum_k eps_k^{2s} |c_k|^2)^{1/2}; Parseval-consistent with weight (L/M)^n.
inline double hs_norm(const SpectralField& f, double s) { return std::sqrt(hs_norm_squared(f, s)); }
inline double hs_norm(const SpectralField& f) { return hs_norm(f, f.grid().sobolev()); }

inline double hs_inner(const SpectralField& f, const SpectralField& g, double s) {
  require_same_grid(f.grid(), g.grid());
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    acc += std::pow(f.grid().eps(i), 2.0 * s) * std::real(f[i] * std::conj(g[i]));
  return f.grid().volume() * acc;
}

/// The torus integral of f*g.
inline double integral_product(const SpectralField& f, const SpectralField& g) { return hs_inner(f, g, 0.0); }

/// sum_k |c_k|, which dominates the sup norm of the field.
inline double coefficient_l1(const SpectralField& f) {
  double acc = 0.0;
  for (const auto& c : f.coeffs()) acc += std::abs(c);
  return acc;
}

/// Multiply coefficient k by eps_k^power.
inline SpectralField scale_by_eps(SpectralField f, double power) {
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::pow(f.grid().eps(i), power);
  return f;
}

/// Partial derivative along spatial direction d.
inline SpectralField derivative(SpectralField f, int d) {
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= cplx(0.0, f.grid().xi(i, d));
  return f;
}

namespace detail {

inline void fft_lines(std::vector<cplx>& data, int M, int n, bool inverse) {
  static thread_local Eigen::FFT<double> fft;
  std::vector<cplx> in(M), out(M);
  if (n == 1) {
    in.assign(data.begin(), data.end());
    if (inverse) fft.inv(out, in); else fft.fwd(out, in);
    data.assign(out.begin(), out.end());
    return;
  }
  for (int axis = 0; axis < 2; ++axis) {
    for (int line = 0; line < M; ++line) {
      for (int j = 0; j < M; ++j) in[j] = axis == 0 ? data[j * M + line] : data[line * M + j];
      if (inverse) fft.inv(out, in); else fft.fwd(out, in);
      for (int j = 0; j < M; ++j) (axis == 0 ? data[j * M + line] : data[line * M + j]) = out[j];
    }
  }
}

inline std::size_t fft_bin(const SpectralGrid& g, std::size_t i) {
  const int M = g.modes_per_dim();
  const auto& k = g.wavenumber(i);
  const auto wrap = [M](int v) { return static_cast<std::size_t>((v % M + M) % M); };
  if (g.dim() == 1) return wrap(k[0]);
  return wrap(k[0]) * M + wrap(k[1]);
}

}  // namespace detail

/// Point values f(x_j) on the uniform sample grid x_j = j L / M (row-major for n = 2).
inline std::vector<double> to_samples(const SpectralField& f) {
  const auto& g = f.grid();
  std::vector<cplx> buf(g.samples(), cplx{});
  for (std::size_t i = 0; i < f.size(); ++i) buf[detail::fft_bin(g, i)] = f[i];
  detail::fft_lines(buf, g.modes_per_dim(), g.dim(), true);
  const double scale = static_cast<double>(g.samples());
  std::vector<double> out(buf.size());
  for (std::size_t j = 0; j < buf.size(); ++j) out[j] = buf[j].real() * scale;
  return out;
}

/// Inverse of to_samples on the retained band; Nyquist content of the samples is discarded.
inline SpectralField from_samples(const SpectralGrid& g, const std::vector<double>& samples) {
  if (samples.size() != g.samples()) throw GridError("sample count does not match grid");
  std::vector<cplx> buf(samples.begin(), samples.end());
  detail::fft_lines(buf, g.modes_per_dim(), g.dim(), false);
  const double scale = 1.0 / static_cast<double>(g.samples());
  SpectralField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = buf[detail::fft_bin(g, i)] * scale;
  return f;
}

inline double max_abs_sample(const SpectralField& f) {
  double m = 0.0;
  for (double v : to_samples(f)) m = std::max(m, std::abs(v));
  return m;
}

/// Point value at an arbitrary x by direct summation.
inline double point_value(const SpectralField& f, const std::array<double, 2>& x) {
  const auto& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double phase = 0.0;
    for (int d = 0; d < g.dim(); ++d) phase += g.xi(i, d) * x[d];
    acc += std::real(f[i] * std::polar(1.0, phase));
  }
  return acc;
}

namespace detail {

/// Coefficients on the square band |k_d| <= radius, used for exact convolutions.
struct WideCoeffs {
  int n = 1;
  int radius = 0;
  std::vector<cplx> c;

  int side() const { return 2 * radius + 1; }
};

inline WideCoeffs widen(const SpectralField& f) {
  WideCoeffs w{f.grid().dim(), f.grid().half_band(), f.coeffs()};
  return w;
}

inline WideCoeffs convolve(const WideCoeffs& a, const WideCoeffs& b) {
  WideCoeffs out{a.n, a.radius + b.radius, {}};
  const int so = out.side(), sa = a.side(), sb = b.side();
  out.c.assign(a.n == 1 ? so : static_cast<std::size_t>(so) * so, cplx{});
  std::vector<std::size_t> nzb;
  for (std::size_t j = 0; j < b.c.size(); ++j)
    if (b.c[j] != cplx{}) nzb.push_back(j);
  for (std::size_t i = 0; i < a.c.size(); ++i) {
    const cplx ai = a.c[i];
    if (ai == cplx{}) continue;
    if (a.n == 1) {
      for (std::size_t j : nzb) out.c[i + j] += ai * b.c[j];
    } else {
      const std::size_t ia = i / sa, ja = i % sa;
      for (std::size_t j : nzb) {
        const std::size_t ib = j / sb, jb = j % sb;
        out.c[(ia + ib) * so + (ja + jb)] += ai * b.c[j];
      }
    }
  }
  return out;
}

inline SpectralField truncate(const SpectralGrid& g, const WideCoeffs& w, int keep) {
  SpectralField f(g);
  const int N = g.half_band();
  const int off = w.radius - N;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& k = g.wavenumber(i);
    bool inside = true;
    for (int d = 0; d < g.dim(); ++d) inside = inside && std::abs(k[d]) <= keep;
    if (!inside) continue;
    if (g.dim() == 1) {
      f[i] = w.c[k[0] + N + off];
    } else {
      f[i] = w.c[static_cast<std::size_t>(k[0] + N + off) * w.side() + (k[1] + N + off)];
    }
  }
  return f;
}

inline int dealias_cutoff(const SpectralGrid& g) { return g.modes_per_dim() / 3; }

inline SpectralField band_limit(SpectralField f, int keep) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& k = f.grid().wavenumber(i);
    for (int d = 0; d < f.grid().dim(); ++d)
      if (std::abs(k[d]) > keep) f[i] = cplx{};
  }
  return f;
}

}  // namespace detail

/**
 * @brief Galerkin projection of the pointwise product of several fields.
 *
 * The full product is formed exactly by convolution of coefficient arrays and
 * projected once onto the retained band. With `dealias` the factors and the
 * result are additionally restricted to |k_d| <= M/3.
 */
inline SpectralField product(const std::vector<const SpectralField*>& factors, bool dealias = false) {
  if (factors.empty()) throw GridError("empty product");
  const SpectralGrid& g = factors.front()->grid();
  for (const auto* f : factors) require_same_grid(g, f->grid());
  const int keep = dealias ? detail::dealias_cutoff(g) : g.half_band();
  auto prep = [&](const SpectralField& f) {
    return detail::widen(dealias ? detail::band_limit(f, keep) : f);
  };
  detail::WideCoeffs acc = prep(*factors.front());
  for (std::size_t j = 1; j < factors.size(); ++j) acc = detail::convolve(acc, prep(*factors[j]));
  return detail::truncate(g, acc, keep);
}

inline SpectralField product(const SpectralField& f, const SpectralField& g, bool dealias = false) {
  return product({&f, &g}, dealias);
}

/// Continuum Sobolev constant I(n,m,s) = (int eps^{-2s} dxi)^{1/2} and its closed-form upper bound.
struct SobolevConstant {
  double value = 0.0;
  double bound = 0.0;
};

inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

inline SobolevConstant sobolev_constant(int n, double m, double s) {
  if (!(s > 0.5 * n)) throw DomainError("sobolev_constant needs s > n/2");
  if (!(m > 0.0)) throw DomainError("sobolev_constant needs m > 0");
  boost::math::quadrature::exp_sinh<double> integrator;
  const double radial = integrator.integrate(
      [n, s](double t) { return std::pow(t, n - 1) * std::pow(1.0 + t * t, -s); }, 0.0,
      std::numeric_limits<double>::infinity());
  const double area = unit_sphere_area(n);
  SobolevConstant out;
  out.value = std::sqrt(area * std::pow(m, n - 2.0 * s) * radial);
  out.bound = std::pow(m, 0.5 * n - s) * std::sqrt(area) * std::sqrt(2.0 * s / (n * (2.0 * s - n)));
  return out;
}

/// Lattice version of I: ((2 pi / L)^n sum over retained modes of eps^{-2s})^{1/2}.
inline double discrete_sobolev_constant(const SpectralGrid& g, double s) {
  if (!(s > 0.5 * g.dim())) throw DomainError("sobolev_constant needs s > n/2");
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) acc += std::pow(g.eps(i), -2.0 * s);
  return std::sqrt(std::pow(2.0 * std::numbers::pi / g.period(), g.dim()) * acc);
}

/// Cauchy data (u, du/dt) at one time slice.
struct CauchyPair {
  SpectralField u0;
  SpectralField u1;

  CauchyPair() = default;
  explicit CauchyPair(const SpectralGrid& g) : u0(g), u1(g) {}
  CauchyPair(SpectralField a, SpectralField b) : u0(std::move(a)), u1(std::move(b)) {
    require_same_grid(u0.grid(), u1.grid());
  }

  const SpectralGrid& grid() const { return u0.grid(); }

  CauchyPair& operator+=(const CauchyPair& o) {
    u0 += o.u0;
    u1 += o.u1;
    return *this;
  }
  CauchyPair& operator-=(const CauchyPair& o) {
    u0 -= o.u0;
    u1 -= o.u1;
    return *this;
  }
  CauchyPair& operator*=(double a) {
    u0 *= a;
    u1 *= a;
    return *this;
  }
  friend CauchyPair operator+(CauchyPair a, const CauchyPair& b) { return a += b; }
  friend CauchyPair operator-(CauchyPair a, const CauchyPair& b) { return a -= b; }
  friend CauchyPair operator*(double a, CauchyPair d) { return d *= a; }
};

/// (||u0||^2_{H^{s+1}} + ||u1||^2_{H^s})^{1/2}.
inline double pair_norm(const CauchyPair& d, double s) {
  return std::sqrt(hs_norm_squared(d.u0, s + 1.0) + hs_norm_squared(d.u1, s));
}
inline double pair_norm(const CauchyPair& d) { return pair_norm(d, d.grid().sobolev()); }

inline double pair_inner(const CauchyPair& a, const CauchyPair& b, double s) {
  return hs_inner(a.u0, b.u0, s + 1.0) + hs_inner(a.u1, b.u1, s);
}

/// Random real field with coefficients ~ N(0,1) * eps^{-decay}.
template <class Rng>
SpectralField random_field(const SpectralGrid& g, Rng& rng, double decay = 0.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t j = g.mirror(i);
    if (j < i) continue;
    const double w = std::pow(g.eps(i), -decay);
    if (i == j) {
      f[i] = w * normal(rng);
    } else {
      const cplx c(w * normal(rng), w * normal(rng));
      f[i] = c;
      f[j] = std::conj(c);
    }
  }
  return f;
}

template <class Rng>
CauchyPair random_pair(const SpectralGrid& g, Rng& rng, double norm, double decay = 2.0) {
  const double s = g.sobolev();
  CauchyPair d(scale_by_eps(random_field(g, rng, decay), -1.0), random_field(g, rng, decay));
  const double n = pair_norm(d, s);
  return (norm / n) * d;
}

}  // namespace kgfock
