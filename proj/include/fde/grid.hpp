#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace fde {

/// Error raised for invalid inputs (bad shapes, out-of-range parameters).
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Error raised when a numerical procedure fails (divergence, loss of
/// definiteness, iteration budget exhausted).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Uniform partition of [t_start, t_end] into n_steps cells.
class UniformGrid {
public:
  UniformGrid() = default;
  UniformGrid(double t_start, double t_end, std::size_t n_steps)
      : t_start_(t_start), t_end_(t_end), n_steps_(n_steps) {
    if (!(t_end > t_start))
      throw ValidationError("grid: t_end must exceed t_start");
    if (n_steps == 0)
      throw ValidationError("grid: n_steps must be at least 1");
  }

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_nodes() const { return n_steps_ + 1; }
  double dt() const { return (t_end_ - t_start_) / static_cast<double>(n_steps_); }
  double length() const { return t_end_ - t_start_; }

  double node(std::size_t i) const {
    if (i == n_steps_) return t_end_;
    return t_start_ + static_cast<double>(i) * dt();
  }

  /// Index of the node closest to t; throws if t is not a node (relative tol).
  std::size_t index_of(double t, double rel_tol = 1e-9) const {
    const double x = (t - t_start_) / dt();
    const double r = std::round(x);
    if (r < 0.0 || r > static_cast<double>(n_steps_) || std::abs(x - r) > rel_tol * std::max(1.0, std::abs(x)))
      throw ValidationError("grid: time " + std::to_string(t) + " is not a grid node");
    return static_cast<std::size_t>(r);
  }

  /// Same spacing over a sub-range of nodes [i0, i1].
  UniformGrid slice(std::size_t i0, std::size_t i1) const {
    if (i1 <= i0 || i1 > n_steps_) throw ValidationError("grid: bad slice");
    return UniformGrid(node(i0), node(i1), i1 - i0);
  }

  /// Sub-grid keeping every `stride`-th node.
  UniformGrid coarsen(std::size_t stride) const {
    if (stride == 0 || n_steps_ % stride != 0)
      throw ValidationError("grid: stride must divide n_steps");
    return UniformGrid(t_start_, t_end_, n_steps_ / stride);
  }

  bool is_dyadic_to(std::size_t level) const {
    if (level >= 63) return false;
    const std::size_t p = std::size_t{1} << level;
    return n_steps_ % p == 0;
  }

  friend bool operator==(const UniformGrid& a, const UniformGrid& b) {
    return a.n_steps_ == b.n_steps_ && a.t_start_ == b.t_start_ && a.t_end_ == b.t_end_;
  }

private:
  double t_start_ = 0.0;
  double t_end_ = 1.0;
  std::size_t n_steps_ = 1;
};

/// A path sampled at the nodes of a uniform grid, values in R^dim.
/// Row i of `values` is the sample at node i.
class GridPath {
public:
  GridPath() = default;
  GridPath(UniformGrid grid, std::size_t dim)
      : grid_(grid), values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.n_nodes()),
                                                   static_cast<Eigen::Index>(dim))) {
    if (dim == 0) throw ValidationError("path: dimension must be at least 1");
  }
  GridPath(UniformGrid grid, Eigen::MatrixXd values) : grid_(grid), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != grid_.n_nodes())
      throw ValidationError("path: values must have n_steps + 1 rows");
    if (values_.cols() == 0) throw ValidationError("path: dimension must be at least 1");
  }

  template <class F>
  static GridPath from_function(UniformGrid grid, F&& fn) {
    GridPath p(grid, 1);
    for (std::size_t i = 0; i < grid.n_nodes(); ++i) p.values_(static_cast<Eigen::Index>(i), 0) = fn(grid.node(i));
    return p;
  }

  const UniformGrid& grid() const { return grid_; }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  double operator()(std::size_t i, std::size_t c = 0) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  }
  double& operator()(std::size_t i, std::size_t c = 0) {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  }
  auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }
  auto row(std::size_t i) { return values_.row(static_cast<Eigen::Index>(i)); }

  /// Restriction to nodes [i0, i1].
  GridPath slice(std::size_t i0, std::size_t i1) const {
    const auto g = grid_.slice(i0, i1);
    return GridPath(g, values_.middleRows(static_cast<Eigen::Index>(i0), static_cast<Eigen::Index>(i1 - i0 + 1)));
  }

  /// Keep every `stride`-th node.
  GridPath coarsen(std::size_t stride) const {
    const auto g = grid_.coarsen(stride);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(g.n_nodes()), values_.cols());
    for (std::size_t i = 0; i < g.n_nodes(); ++i)
      v.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(i * stride));
    return GridPath(g, std::move(v));
  }

  double scale() const { return std::max(1.0, values_.cwiseAbs().maxCoeff()); }

private:
  UniformGrid grid_;
  Eigen::MatrixXd values_;
};

inline void require_same_grid(const GridPath& a, const GridPath& b, const char* what) {
  if (!(a.grid() == b.grid())) throw ValidationError(std::string(what) + ": paths live on different grids");
}

}  // namespace fde
