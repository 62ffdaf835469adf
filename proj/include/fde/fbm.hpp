#pragma once

// Fractional Brownian motion: covariance, exact grid samplers, the Volterra
// kernel K_H and a quadrature realization of the operator K*_H, which gives
// the Cameron-Martin inner product <phi, psi>_H = <K* phi, K* psi>_{L^2}.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fde/grid.hpp"
#include "fde/quadrature.hpp"
#include "fde/rng.hpp"

namespace fde {

/// Cov(B_s, B_t) for one component of fBm with Hurst index H.
inline double covariance(double s, double t, double H) {
  if (s < 0.0 || t < 0.0) throw ValidationError("covariance: times must be non-negative");
  const double e = 2.0 * H;
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

/// Autocovariance of fractional Gaussian noise with step dt at integer lag k.
inline double fgn_autocovariance(std::size_t k, double H, double dt) {
  const double e = 2.0 * H;
  const double kk = static_cast<double>(k);
  const double v = std::pow(kk + 1.0, e) - 2.0 * std::pow(kk, e) + (k == 0 ? 1.0 : std::pow(kk - 1.0, e));
  return 0.5 * std::pow(dt, e) * v;
}

namespace detail {

// s^{-alpha} int_s^t (u-s)^{alpha-1} u^alpha du after u = s + v^{1/alpha}:
// (1/alpha) s^{-alpha} int_0^{(t-s)^alpha} (s + v^{1/alpha})^alpha dv.
inline double kernel_unit(double t, double s, double H) {
  const double a = H - 0.5;
  const double p = 1.0 / a;
  const double top = std::pow(t - s, a);
  auto f = [&](double v) { return std::pow(s + std::pow(v, p), a); };
  const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, top, 10, 1e-11);
  return I / a * std::pow(s, -a);
}

inline double reproduction_unit(double s, double t, double H) {
  const double lo = std::min(s, t);
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double r) {
    if (r <= 0.0 || r >= lo) return 0.0;
    return kernel_unit(t, r, H) * kernel_unit(s, r, H);
  };
  return ts.integrate(f, 0.0, lo, 1e-12);
}

}  // namespace detail

/// Hurst index with the kernel normalization c_H, calibrated numerically on
/// R_H(s, t) = int_0^{s^t} K_H(t, r) K_H(s, r) dr at (T/2, T).
class HurstParams {
public:
  explicit HurstParams(double H, double T = 1.0) : H_(H) {
    if (!(H > 0.5 && H < 1.0)) throw ValidationError("HurstParams: H must lie in (1/2, 1)");
    if (!(T > 0.0)) throw ValidationError("HurstParams: T must be positive");
    const double s = 0.5 * T, t = T;
    c_H_ = std::sqrt(covariance(s, t, H) / detail::reproduction_unit(s, t, H));
  }

  double H() const { return H_; }
  double c_H() const { return c_H_; }
  double alpha() const { return H_ - 0.5; }

  /// Worst relative error of the reproduction identity over the given pairs.
  template <class Pairs>
  double reproduction_error(const Pairs& pairs) const {
    double worst = 0.0;
    for (const auto& [s, t] : pairs) {
      const double lhs = c_H_ * c_H_ * detail::reproduction_unit(s, t, H_);
      const double rhs = covariance(s, t, H_);
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
    return worst;
  }

private:
  double H_;
  double c_H_ = 1.0;
};

/// K_H(t, s) = c_H s^{1/2-H} int_s^t (u - s)^{H-3/2} u^{H-1/2} du, 0 < s < t.
inline double kernel_K(double t, double s, const HurstParams& hp) {
  if (!(s > 0.0)) throw ValidationError("kernel_K: s must be positive (kernel singular at 0)");
  if (!(s < t)) throw ValidationError("kernel_K: requires s < t");
  return hp.c_H() * detail::kernel_unit(t, s, hp.H());
}

/// d/dr K_H(r, t) = c_H (r/t)^{H-1/2} (r - t)^{H-3/2}, r > t > 0.
inline double kernel_dK(double r, double t, const HurstParams& hp) {
  if (!(t > 0.0 && r > t)) throw ValidationError("kernel_dK: requires r > t > 0");
  const double a = hp.alpha();
  return hp.c_H() * std::pow(r / t, a) * std::pow(r - t, a - 1.0);
}

// ---------------------------------------------------------------------------
// Sampling

enum class FbmMethod { cholesky, circulant };

inline const char* to_string(FbmMethod m) { return m == FbmMethod::cholesky ? "cholesky" : "circulant"; }

inline FbmMethod default_fbm_method(std::size_t n_steps) {
  return n_steps <= 2048 ? FbmMethod::cholesky : FbmMethod::circulant;
}

struct FbmSample {
  GridPath path;
  double H = 0.5;
  std::uint64_t seed = 0;
  FbmMethod method = FbmMethod::cholesky;
};

/// Lower Cholesky factor; throws naming the first non-positive pivot.
inline Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Repeat the factorization column by column to locate the failing pivot.
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = a(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > 0.0))
      throw NumericalError("cholesky: covariance not positive definite at pivot " + std::to_string(j) +
                           " (value " + std::to_string(d) + ")");
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) L(i, j) = (a(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
  }
  throw NumericalError("cholesky: factorization failed without a non-positive pivot");
}

/// Exact sampler of fBm on a grid starting at 0. The factorization (Cholesky
/// factor or circulant eigenvalues) is computed once; sample() is const and
/// safe to call concurrently.
class FbmSampler {
public:
  FbmSampler(UniformGrid grid, double H, FbmMethod method) : grid_(grid), H_(H), method_(method) {
    if (grid.t_start() != 0.0) throw ValidationError("sample_fbm: grid must start at 0");
    if (!(H >= 0.5 && H < 1.0)) throw ValidationError("sample_fbm: H must lie in [1/2, 1)");
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    if (method == FbmMethod::cholesky) {
      Eigen::MatrixXd cov(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              fgn_autocovariance(i > j ? i - j : j - i, H, dt);
      chol_ = cholesky_lower(cov);
    } else {
      const std::size_t m = 2 * n;
      std::vector<std::complex<double>> c(m);
      for (std::size_t k = 0; k <= n; ++k) c[k] = fgn_autocovariance(k, H, dt);
      for (std::size_t k = n + 1; k < m; ++k) c[k] = fgn_autocovariance(m - k, H, dt);
      plan_ = std::make_shared<Plan>(m);
      std::vector<std::complex<double>> out(m);
      plan_->execute(c.data(), out.data());
      eig_.resize(m);
      double emax = 0.0;
      for (std::size_t k = 0; k < m; ++k) emax = std::max(emax, std::abs(out[k].real()));
      for (std::size_t k = 0; k < m; ++k) {
        const double e = out[k].real();
        if (e < -1e-10 * emax)
          throw NumericalError("circulant embedding has negative eigenvalue " + std::to_string(e) + " at index " +
                               std::to_string(k) + "; use the cholesky method");
        eig_[k] = std::sqrt(std::max(e, 0.0) / static_cast<double>(m));
      }
    }
  }

  const UniformGrid& grid() const { return grid_; }
  double H() const { return H_; }
  FbmMethod method() const { return method_; }

  FbmSample sample(std::size_t d, std::uint64_t seed, std::uint64_t path_index = 0) const {
    if (d == 0) throw ValidationError("sample_fbm: d must be at least 1");
    const std::size_t n = grid_.n_steps();
    GridPath path(grid_, d);
    Eigen::VectorXd incr(static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < d; ++c) {
      CounterRng rng(seed, path_index, c);
      if (method_ == FbmMethod::cholesky) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        incr = chol_.triangularView<Eigen::Lower>() * z;
      } else {
        const std::size_t m = 2 * n;
        std::vector<std::complex<double>> in(m), out(m);
        for (std::size_t k = 0; k < m; ++k) {
          const double re = rng.normal();
          const double im = rng.normal();
          in[k] = eig_[k] * std::complex<double>(re, im);
        }
        plan_->execute(in.data(), out.data());
        for (std::size_t i = 0; i < n; ++i) incr(static_cast<Eigen::Index>(i)) = out[i].real();
      }
      double acc = 0.0;
      path(0, c) = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += incr(static_cast<Eigen::Index>(i));
        path(i + 1, c) = acc;
      }
    }
    return FbmSample{std::move(path), H_, seed, method_};
  }

private:
  // Forward DFT plan of fixed size; execution on caller-owned buffers.
  class Plan {
  public:
    explicit Plan(std::size_t m) : m_(m) {
      std::lock_guard<std::mutex> lk(mutex());
      auto* a = fftw_alloc_complex(m);
      auto* b = fftw_alloc_complex(m);
      plan_ = fftw_plan_dft_1d(static_cast<int>(m), a, b, FFTW_FORWARD, FFTW_ESTIMATE);
      fftw_free(a);
      fftw_free(b);
    }
    ~Plan() {
      std::lock_guard<std::mutex> lk(mutex());
      fftw_destroy_plan(plan_);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    void execute(const std::complex<double>* in, std::complex<double>* out) const {
      auto* a = fftw_alloc_complex(m_);
      auto* b = fftw_alloc_complex(m_);
      std::copy(in, in + m_, reinterpret_cast<std::complex<double>*>(a));
      fftw_execute_dft(plan_, a, b);
      std::copy(reinterpret_cast<std::complex<double>*>(b), reinterpret_cast<std::complex<double>*>(b) + m_, out);
      fftw_free(a);
      fftw_free(b);
    }

  private:
    static std::mutex& mutex() {
      static std::mutex m;
      return m;
    }
    std::size_t m_;
    fftw_plan plan_;
  };

  UniformGrid grid_;
  double H_;
  FbmMethod method_;
  Eigen::MatrixXd chol_;
  std::vector<double> eig_;
  std::shared_ptr<Plan> plan_;
};

inline FbmSample sample_fbm(const UniformGrid& grid, double H, std::size_t d, std::uint64_t seed,
                            FbmMethod method, std::uint64_t path_index = 0) {
  return FbmSampler(grid, H, method).sample(d, seed, path_index);
}

inline FbmSample sample_fbm(const UniformGrid& grid, double H, std::size_t d, std::uint64_t seed) {
  return sample_fbm(grid, H, d, seed, default_fbm_method(grid.n_steps()));
}

// ---------------------------------------------------------------------------
// K*_H on step functions

/// Discretization of phi -> K*_H phi for phi constant on the cells
/// [t_j, t_{j+1}) of a grid starting at 0. Row q of the action matrix holds
/// int_{cell j, r > tau_q} dK(r, tau_q)/dr dr; tau_q, w_q are quadrature
/// nodes and weights in the outer L^2 variable, graded toward the kernel
/// singularities at t = 0 and at each cell's right end.
class KStarMatrix {
public:
  KStarMatrix(UniformGrid grid, HurstParams hp) : grid_(grid), hp_(hp) {
    if (grid.t_start() != 0.0) throw ValidationError("build_kstar: grid must start at 0");
    build();
  }

  const UniformGrid& grid() const { return grid_; }
  const HurstParams& hurst() const { return hp_; }
  std::size_t n_cells() const { return grid_.n_steps(); }
  const std::vector<double>& nodes() const { return tau_; }
  const Eigen::VectorXd& weights() const { return w_; }
  const Eigen::MatrixXd& action() const { return A_; }

  /// K* phi evaluated at the quadrature nodes.
  Eigen::VectorXd apply(const Eigen::VectorXd& cells) const {
    check(cells);
    return A_ * cells;
  }

  double inner(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const {
    check(phi);
    check(psi);
    const Eigen::VectorXd a = A_ * phi;
    const Eigen::VectorXd b = A_ * psi;
    return (w_.array() * a.array() * b.array()).sum();
  }

  /// Gram matrix of the cell indicators, G_{jk} = <1_j, 1_k>_H.
  Eigen::MatrixXd gram() const { return A_.transpose() * w_.asDiagonal() * A_; }

private:
  void check(const Eigen::VectorXd& v) const {
    if (static_cast<std::size_t>(v.size()) != n_cells())
      throw ValidationError("KStarMatrix: cell vector length does not match the grid");
  }

  void build() {
    const double a = hp_.alpha();
    const double p = 1.0 / a;
    const double q = 1.0 / (1.0 - 2.0 * a);
    const double dt = grid_.dt();
    const std::size_t n = grid_.n_steps();
    const auto qt = static_cast<std::size_t>(std::clamp(std::ceil(p) + 4.0, 8.0, 40.0));
    const auto rule = gauss_legendre(qt);

    std::vector<double> w;
    // cell 0: [0, dt/2] graded toward 0, [dt/2, dt] graded toward dt
    for (std::size_t k = 0; k < qt; ++k) {
      const double s = rule.nodes[k];
      tau_.push_back(0.5 * dt * std::pow(s, q));
      w.push_back(rule.weights[k] * 0.5 * dt * q * std::pow(s, q - 1.0));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double right = grid_.node(j + 1);
      const double width = j == 0 ? 0.5 * dt : dt;
      for (std::size_t k = 0; k < qt; ++k) {
        const double s = rule.nodes[k];
        tau_.push_back(right - width * std::pow(s, p));
        w.push_back(rule.weights[k] * width * p * std::pow(s, p - 1.0));
      }
    }
    w_ = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));

    const auto inner_rule = gauss_legendre(8);
    A_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tau_.size()), static_cast<Eigen::Index>(n));
    const double c = hp_.c_H();
    for (std::size_t row = 0; row < tau_.size(); ++row) {
      const double tau = tau_[row];
      const double pref = c / a * std::pow(tau, -a);
      auto f = [&](double v) { return std::pow(tau + std::pow(v, p), a); };
      const auto j0 = std::min(n - 1, static_cast<std::size_t>(std::floor(tau / dt)));
      for (std::size_t j = j0; j < n; ++j) {
        const double lo = std::max(grid_.node(j), tau);
        const double hi = grid_.node(j + 1);
        if (!(hi > lo)) continue;
        const double vlo = std::pow(lo - tau, a);
        const double vhi = std::pow(hi - tau, a);
        double I = 0.0;
        if (j == j0) {
          I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, vlo, vhi, 10, 1e-11);
        } else {
          for (std::size_t k = 0; k < inner_rule.nodes.size(); ++k)
            I += inner_rule.weights[k] * f(vlo + (vhi - vlo) * inner_rule.nodes[k]);
          I *= (vhi - vlo);
        }
        A_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = pref * I;
      }
    }
  }

  UniformGrid grid_;
  HurstParams hp_;
  std::vector<double> tau_;
  Eigen::VectorXd w_;
  Eigen::MatrixXd A_;
};

inline KStarMatrix build_kstar(const UniformGrid& grid, const HurstParams& hp) { return KStarMatrix(grid, hp); }

/// Cell values of the indicator of [0, t]; t must be a grid node.
inline Eigen::VectorXd indicator_cells(const UniformGrid& grid, double t) {
  const std::size_t k = grid.index_of(t);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.n_steps()));
  v.head(static_cast<Eigen::Index>(k)).setOnes();
  return v;
}

/// sum_l <phi^l, psi^l>_H for step functions given as (cells x components).
inline double h_inner(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi, const KStarMatrix& kstar) {
  if (phi.rows() != psi.rows() || phi.cols() != psi.cols())
    throw ValidationError("h_inner: shape mismatch");
  double s = 0.0;
  for (Eigen::Index l = 0; l < phi.cols(); ++l) s += kstar.inner(phi.col(l), psi.col(l));
  return s;
}

}  // namespace fde
