#pragma once

// Discrete increment calculus on uniform grids: the first and second
// difference operators, grid Hölder seminorms and a dyadic sewing routine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "fde/grid.hpp"

namespace fde {

/// Two-parameter increment over node pairs, values in R^dim.
/// value(i, i, c) is always 0.
class Increment2 {
public:
  using Fn = std::function<double(std::size_t, std::size_t, std::size_t)>;

  Increment2(UniformGrid grid, std::size_t dim, Fn fn)
      : grid_(grid), dim_(dim), fn_(std::make_shared<Fn>(std::move(fn))) {}

  /// Dense table, index ((i * n_nodes) + j) * dim + c.
  static Increment2 from_table(UniformGrid grid, std::size_t dim, std::vector<double> table) {
    const std::size_t n = grid.n_nodes();
    if (table.size() != n * n * dim) throw ValidationError("Increment2: table size mismatch");
    Increment2 out(grid, dim, Fn{});
    out.table_ = std::make_shared<const std::vector<double>>(std::move(table));
    return out;
  }

  const UniformGrid& grid() const { return grid_; }
  std::size_t dim() const { return dim_; }

  /// Dense storage when built by from_table, else nullptr.
  const std::vector<double>* table() const { return table_.get(); }

  double operator()(std::size_t i, std::size_t j, std::size_t c = 0) const {
    if (i == j) return 0.0;
    if (table_) return (*table_)[(i * grid_.n_nodes() + j) * dim_ + c];
    return (*fn_)(i, j, c);
  }

private:
  UniformGrid grid_;
  std::size_t dim_;
  std::shared_ptr<Fn> fn_;
  std::shared_ptr<const std::vector<double>> table_;
};

/// (delta h)_{s u t} = h_{st} - h_{su} - h_{ut}, evaluated lazily.
class Increment3 {
public:
  explicit Increment3(Increment2 h) : h_(std::move(h)) {}

  double operator()(std::size_t s, std::size_t u, std::size_t t, std::size_t c = 0) const {
    return h_(s, t, c) - h_(s, u, c) - h_(u, t, c);
  }

  const UniformGrid& grid() const { return h_.grid(); }
  std::size_t dim() const { return h_.dim(); }

  /// Max |value| over all ordered triples s <= u <= t and components.
  double max_abs() const {
    const std::size_t n = grid().n_nodes();
    double m = 0.0;
    if (const auto* tab = h_.table()) {
      // Only s < u < t can be nonzero; for fixed (s, u) the t-entries are strided by dim.
      const auto k = static_cast<Eigen::Index>(dim());
      using Row = Eigen::Map<const Eigen::ArrayXd, 0, Eigen::InnerStride<>>;
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t u = s + 1; u < n; ++u)
          for (Eigen::Index c = 0; c < k; ++c) {
            const auto len = static_cast<Eigen::Index>(n - u - 1);
            if (len == 0) continue;
            const double* st = tab->data() + (s * n + u + 1) * static_cast<std::size_t>(k) + static_cast<std::size_t>(c);
            const double* ut = tab->data() + (u * n + u + 1) * static_cast<std::size_t>(k) + static_cast<std::size_t>(c);
            const double su = (*tab)[(s * n + u) * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)];
            const Row a(st, len, Eigen::InnerStride<>(k));
            const Row b(ut, len, Eigen::InnerStride<>(k));
            m = std::max(m, (a - b - su).abs().maxCoeff());
          }
      return m;
    }
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t u = s; u < n; ++u)
        for (std::size_t t = u; t < n; ++t)
          for (std::size_t c = 0; c < dim(); ++c) m = std::max(m, std::abs((*this)(s, u, t, c)));
    return m;
  }

private:
  Increment2 h_;
};

/// (delta f)_{st} = f_t - f_s, materialized as a dense table.
inline Increment2 delta1(const GridPath& f) {
  const std::size_t n = f.size();
  const std::size_t m = f.dim();
  std::vector<double> table(n * n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < m; ++c) table[(i * n + j) * m + c] = f(j, c) - f(i, c);
  return Increment2::from_table(f.grid(), m, std::move(table));
}

inline Increment3 delta2(const Increment2& h) { return Increment3(h); }

struct HolderReport {
  double exponent = 1.0;
  double seminorm = 0.0;
  std::pair<std::size_t, std::size_t> argmax_pair{0, 0};
};

struct SeminormOptions {
  /// Only pairs with j - i <= pair_window are scanned; 0 selects all pairs
  /// when the range has at most 4097 nodes and a 4096-node window otherwise.
  std::size_t pair_window = 0;
};

/// Grid estimate of sup |f_t - f_s| / |t - s|^mu over nodes [i0, i1].
/// The result is a lower estimate of the continuum seminorm.
inline HolderReport holder_seminorm(const GridPath& f, double mu, std::size_t i0, std::size_t i1,
                                    SeminormOptions opts = {}) {
  if (!(mu > 0.0 && mu <= 1.0)) throw ValidationError("holder_seminorm: exponent must lie in (0, 1]");
  if (i1 >= f.size() || i1 <= i0) throw ValidationError("holder_seminorm: sub-interval needs at least 2 nodes");

  const std::size_t span = i1 - i0;
  std::size_t window = opts.pair_window;
  if (window == 0) window = span <= 4096 ? span : 4096;
  window = std::min(window, span);

  const double dt = f.grid().dt();
  std::vector<double> inv_pow(window + 1, 0.0);
  for (std::size_t g = 1; g <= window; ++g) inv_pow[g] = std::pow(static_cast<double>(g) * dt, -mu);

  const auto& v = f.values();
  const Eigen::Index m = v.cols();
  HolderReport rep;
  rep.exponent = mu;
  rep.argmax_pair = {i0, i0 + 1};
  double best = 0.0;
  for (std::size_t i = i0; i < i1; ++i) {
    const std::size_t jmax = std::min(i1, i + window);
    for (std::size_t j = i + 1; j <= jmax; ++j) {
      double sq = 0.0;
      for (Eigen::Index c = 0; c < m; ++c) {
        const double d = v(static_cast<Eigen::Index>(j), c) - v(static_cast<Eigen::Index>(i), c);
        sq += d * d;
      }
      const double r = std::sqrt(sq) * inv_pow[j - i];
      if (r > best) {
        best = r;
        rep.argmax_pair = {i, j};
      }
    }
  }
  rep.seminorm = best;
  return rep;
}

inline HolderReport holder_seminorm(const GridPath& f, double mu, SeminormOptions opts = {}) {
  return holder_seminorm(f, mu, 0, f.size() - 1, opts);
}

/// Supremum norm of a path over nodes [i0, i1].
inline double sup_norm(const GridPath& f, std::size_t i0, std::size_t i1) {
  double m = 0.0;
  for (std::size_t i = i0; i <= i1; ++i) m = std::max(m, f.row(i).norm());
  return m;
}

inline double sup_norm(const GridPath& f) { return sup_norm(f, 0, f.size() - 1); }

/// Constant of the sewing estimate, (2^mu - 2)^{-1}.
inline double sewing_constant(double mu) {
  if (!(mu > 1.0)) throw ValidationError("sewing_constant: exponent must exceed 1");
  return 1.0 / (std::pow(2.0, mu) - 2.0);
}

struct SewingResult {
  /// Running compound sum at the target level, on the level's sub-grid.
  GridPath integral;
  /// Compound sum over [t_start, t_end] at dyadic levels 0..target.
  std::vector<Eigen::VectorXd> level_values;
  /// sup over dyadic triples (a, m, b) of |(delta g)_{amb}| / |b - a|^mu.
  double delta_norm = 0.0;
  double mu = 0.0;

  /// Bound on |S_target - S_k| from the geometric tail with ratio 2^{1-mu}.
  double tail_bound(std::size_t k) const {
    const double len = integral.grid().length();
    return delta_norm * std::pow(len, mu) * std::pow(2.0, static_cast<double>(k) * (1.0 - mu)) *
           std::pow(2.0, mu) * sewing_constant(mu);
  }
};

/// Dyadic sewing of a germ g: compound sums over the 2^k-piece partitions of
/// the grid interval, k = 0..target_level.
inline SewingResult sewing(const Increment2& g, double mu, std::size_t target_level) {
  if (!(mu > 1.0)) throw ValidationError("sewing: exponent must exceed 1");
  const auto& grid = g.grid();
  if (!grid.is_dyadic_to(target_level))
    throw ValidationError("sewing: n_steps is not divisible by 2^target_level");

  const std::size_t m = g.dim();
  SewingResult out;
  out.mu = mu;
  for (std::size_t k = 0; k <= target_level; ++k) {
    const std::size_t pieces = std::size_t{1} << k;
    const std::size_t stride = grid.n_steps() / pieces;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t p = 0; p < pieces; ++p) {
      const std::size_t a = p * stride;
      const std::size_t b = a + stride;
      for (std::size_t c = 0; c < m; ++c) s(static_cast<Eigen::Index>(c)) += g(a, b, c);
      if (k < target_level) {
        const std::size_t mid = a + stride / 2;
        double sq = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          const double d = g(a, b, c) - g(a, mid, c) - g(mid, b, c);
          sq += d * d;
        }
        const double len = grid.node(b) - grid.node(a);
        out.delta_norm = std::max(out.delta_norm, std::sqrt(sq) / std::pow(len, mu));
      }
    }
    out.level_values.push_back(std::move(s));
  }

  const std::size_t pieces = std::size_t{1} << target_level;
  const std::size_t stride = grid.n_steps() / pieces;
  GridPath integral(grid.coarsen(stride), m);
  for (std::size_t p = 0; p < pieces; ++p)
    for (std::size_t c = 0; c < m; ++c)
      integral(p + 1, c) = integral(p, c) + g(p * stride, (p + 1) * stride, c);
  out.integral = std::move(integral);
  return out;
}

}  // namespace fde
