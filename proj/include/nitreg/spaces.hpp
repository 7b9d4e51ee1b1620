#pragma once

// Discretized L^p spaces on tensor grids over [0,1] and [0,1]^2.
//
// Norms and pairings are quadrature-weighted (composite trapezoidal rule), so
// every quantity is a consistent approximation of its continuous counterpart
// independent of the grid size. Dual elements share the primal representation:
// <xi, x> = sum_i w_i xi_i x_i, and the dual norm uses the conjugate exponent.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "nitreg/errors.hpp"

namespace nitreg {

enum class Variance { Primal, Dual };

inline const char* to_string(Variance v) { return v == Variance::Primal ? "primal" : "dual"; }

template <typename Scalar>
class GridSpace {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// [lower, upper] divided into `intervals` equal pieces (intervals + 1 nodes).
  static std::shared_ptr<const GridSpace> interval(int intervals, Scalar exponent = Scalar(2),
                                                   Scalar lower = Scalar(0), Scalar upper = Scalar(1)) {
    if (intervals < 1) throw ParameterError("GridSpace: need at least one interval");
    return std::shared_ptr<const GridSpace>(
        new GridSpace({intervals + 1}, {lower}, {upper}, exponent));
  }

  /// Unit square with nx x ny cells; node (i, j) has flat index i + (nx + 1) * j.
  static std::shared_ptr<const GridSpace> unit_square(int nx, int ny, Scalar exponent = Scalar(2)) {
    if (nx < 1 || ny < 1) throw ParameterError("GridSpace: need at least one cell per axis");
    return std::shared_ptr<const GridSpace>(
        new GridSpace({nx + 1, ny + 1}, {Scalar(0), Scalar(0)}, {Scalar(1), Scalar(1)}, exponent));
  }

  int dimension() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int node_count() const { return static_cast<int>(weights_.size()); }
  int cells(int axis) const { return dims_.at(axis) - 1; }
  Scalar lower(int axis) const { return lower_.at(axis); }
  Scalar upper(int axis) const { return upper_.at(axis); }
  Scalar spacing(int axis) const { return (upper_.at(axis) - lower_.at(axis)) / Scalar(cells(axis)); }

  Scalar measure() const {
    Scalar m(1);
    for (int a = 0; a < dimension(); ++a) m *= upper_[a] - lower_[a];
    return m;
  }

  Scalar exponent() const { return exponent_; }
  Scalar conjugate_exponent() const { return exponent_ / (exponent_ - Scalar(1)); }

  const Vector& weights() const { return weights_; }

  int index(int i, int j = 0) const { return i + dims_[0] * j; }

  /// Coordinate of `node` along `axis`.
  Scalar coordinate(int node, int axis) const {
    int k = axis == 0 ? node % dims_[0] : node / dims_[0];
    return lower_[axis] + spacing(axis) * Scalar(k);
  }

  bool on_boundary(int node) const {
    for (int a = 0; a < dimension(); ++a) {
      int k = a == 0 ? node % dims_[0] : node / dims_[0];
      if (k == 0 || k == dims_[a] - 1) return true;
    }
    return false;
  }

  bool operator==(const GridSpace& o) const {
    return dims_ == o.dims_ && lower_ == o.lower_ && upper_ == o.upper_ && exponent_ == o.exponent_;
  }

  std::string describe() const {
    std::ostringstream os;
    os << "dims=";
    for (std::size_t a = 0; a < dims_.size(); ++a) os << (a ? "x" : "") << dims_[a];
    os << " domain=";
    for (std::size_t a = 0; a < dims_.size(); ++a)
      os << (a ? "," : "") << "[" << lower_[a] << "," << upper_[a] << "]";
    os << " p=" << exponent_;
    return os.str();
  }

 private:
  GridSpace(std::vector<int> dims, std::vector<Scalar> lower, std::vector<Scalar> upper, Scalar exponent)
      : dims_(std::move(dims)), lower_(std::move(lower)), upper_(std::move(upper)), exponent_(exponent) {
    if (!(exponent_ > Scalar(1)) || !std::isfinite(static_cast<double>(exponent_)))
      throw ParameterError("GridSpace: exponent p must satisfy 1 < p < inf");
    for (int d : dims_)
      if (d < 2) throw ParameterError("GridSpace: every axis needs at least two nodes");
    // Tensor-product trapezoidal weights.
    std::vector<Vector> axis_w;
    for (int a = 0; a < dimension(); ++a) {
      Vector w = Vector::Constant(dims_[a], spacing(a));
      w(0) /= Scalar(2);
      w(dims_[a] - 1) /= Scalar(2);
      axis_w.push_back(std::move(w));
    }
    if (dimension() == 1) {
      weights_ = axis_w[0];
    } else {
      weights_.resize(dims_[0] * dims_[1]);
      for (int j = 0; j < dims_[1]; ++j)
        for (int i = 0; i < dims_[0]; ++i) weights_(index(i, j)) = axis_w[0](i) * axis_w[1](j);
    }
  }

  std::vector<int> dims_;
  std::vector<Scalar> lower_;
  std::vector<Scalar> upper_;
  Scalar exponent_;
  Vector weights_;
};

template <typename Scalar>
using SpacePtr = std::shared_ptr<const GridSpace<Scalar>>;

/// A real function sampled on the nodes of a GridSpace, tagged as an element of X or X*.
template <typename Scalar>
class GridFn {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GridFn() = default;

  GridFn(SpacePtr<Scalar> space, Vector values, Variance variance = Variance::Primal)
      : space_(std::move(space)), values_(std::move(values)), variance_(variance) {
    if (!space_) throw DimensionError("GridFn: null space");
    if (values_.size() != space_->node_count())
      throw DimensionError("GridFn: " + std::to_string(values_.size()) + " values for " +
                           std::to_string(space_->node_count()) + " nodes");
  }

  static GridFn zeros(SpacePtr<Scalar> space, Variance variance = Variance::Primal) {
    auto n = space->node_count();
    return GridFn(std::move(space), Vector::Zero(n), variance);
  }

  static GridFn constant(SpacePtr<Scalar> space, Scalar value, Variance variance = Variance::Primal) {
    auto n = space->node_count();
    return GridFn(std::move(space), Vector::Constant(n, value), variance);
  }

  /// Samples `fn` at every node. `fn` receives the node coordinates (x) or (x, y).
  template <typename F>
  static GridFn sample(SpacePtr<Scalar> space, F&& fn, Variance variance = Variance::Primal) {
    Vector v(space->node_count());
    for (int k = 0; k < space->node_count(); ++k) {
      if constexpr (std::is_invocable_v<F, Scalar>) {
        v(k) = fn(space->coordinate(k, 0));
      } else {
        v(k) = fn(space->coordinate(k, 0), space->coordinate(k, 1));
      }
    }
    return GridFn(std::move(space), std::move(v), variance);
  }

  const SpacePtr<Scalar>& space() const { return space_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  Scalar operator[](int k) const { return values_(k); }
  int size() const { return static_cast<int>(values_.size()); }
  Variance variance() const { return variance_; }
  bool is_dual() const { return variance_ == Variance::Dual; }
  bool is_finite() const { return values_.allFinite(); }

  /// Same values reinterpreted with the other variance (Riesz identification of the
  /// weighted discretization).
  GridFn retagged(Variance v) const { return GridFn(space_, values_, v); }

 private:
  SpacePtr<Scalar> space_;
  Vector values_;
  Variance variance_ = Variance::Primal;
};

using GridSpaced = GridSpace<double>;
using GridFnd = GridFn<double>;
using SpacePtrd = SpacePtr<double>;

namespace detail {

template <typename Scalar>
void require_same_space(const GridFn<Scalar>& a, const GridFn<Scalar>& b, const char* what) {
  if (a.space() != b.space() && !(*a.space() == *b.space()))
    throw DimensionError(std::string(what) + ": operands live on different grids");
}

template <typename Scalar>
void require_same_variance(const GridFn<Scalar>& a, const GridFn<Scalar>& b, const char* what) {
  if (a.variance() != b.variance())
    throw ParameterError(std::string(what) + ": cannot mix primal and dual elements");
}

template <typename Scalar>
void require_finite(const GridFn<Scalar>& f, const char* what) {
  if (!f.is_finite()) throw InvalidValueError(std::string(what) + ": non-finite values");
}

template <typename Scalar>
void require_gauge(Scalar r, const char* what) {
  if (!(r > Scalar(1))) throw ParameterError(std::string(what) + ": gauge exponent r must exceed 1");
}

/// (sum_i w_i |v_i|^p)^(1/p)
template <typename Scalar, typename Derived>
Scalar weighted_lp(const Eigen::MatrixBase<Derived>& v, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& w,
                   Scalar p) {
  if (p == Scalar(2)) return std::sqrt((w.array() * v.array().square()).sum());
  Scalar peak = v.cwiseAbs().maxCoeff();
  if (peak == Scalar(0)) return Scalar(0);
  // Scale by the peak so |v/peak|^p never underflows or overflows.
  Scalar s = (w.array() * (v.array().abs() / peak).pow(p)).sum();
  return peak * std::pow(s, Scalar(1) / p);
}

}  // namespace detail

/// L^p norm for primal elements, L^{p*} norm for dual elements.
template <typename Scalar>
Scalar norm(const GridFn<Scalar>& f) {
  detail::require_finite(f, "norm");
  const auto& sp = *f.space();
  Scalar p = f.is_dual() ? sp.conjugate_exponent() : sp.exponent();
  return detail::weighted_lp<Scalar>(f.values(), sp.weights(), p);
}

/// <xi, x> = sum_i w_i xi_i x_i.
template <typename Scalar>
Scalar pairing(const GridFn<Scalar>& xi, const GridFn<Scalar>& x) {
  detail::require_same_space(xi, x, "pairing");
  return (xi.space()->weights().array() * xi.values().array() * x.values().array()).sum();
}

/// Weighted l2 inner product, ignoring variance tags. This is the Hilbert structure
/// used by the inner conjugate-gradient iteration.
template <typename Scalar>
Scalar dot(const GridFn<Scalar>& a, const GridFn<Scalar>& b) {
  return pairing(a, b);
}

/// J_r(f) = ||f||^(r-p) |f|^(p-1) sign(f); zero maps to zero.
template <typename Scalar>
GridFn<Scalar> duality_map(const GridFn<Scalar>& f, Scalar r) {
  detail::require_gauge(r, "duality_map");
  if (f.is_dual()) throw ParameterError("duality_map: argument must be a primal element");
  Scalar nf = norm(f);
  const auto& sp = f.space();
  if (nf == Scalar(0)) return GridFn<Scalar>::zeros(sp, Variance::Dual);
  Scalar p = sp->exponent();
  typename GridFn<Scalar>::Vector v;
  if (p == Scalar(2)) {
    v = f.values();
  } else {
    v = f.values().array().abs().pow(p - Scalar(1)) * f.values().array().sign();
  }
  if (r != p) v *= std::pow(nf, r - p);
  return GridFn<Scalar>(sp, std::move(v), Variance::Dual);
}

/// Delta_r(fbar, f) = ||fbar||^r / r - ||f||^r / r - <J_r(f), fbar - f>.
template <typename Scalar>
Scalar bregman_norm(const GridFn<Scalar>& fbar, const GridFn<Scalar>& f, Scalar r) {
  detail::require_gauge(r, "bregman_norm");
  detail::require_same_space(fbar, f, "bregman_norm");
  Scalar d = std::pow(norm(fbar), r) / r - std::pow(norm(f), r) / r;
  auto j = duality_map(f, r);
  d -= pairing(j, GridFn<Scalar>(f.space(), fbar.values() - f.values(), f.variance()));
  return d;
}

// Vector arithmetic. All of it preserves the variance tag and rejects mixed tags.

template <typename Scalar>
GridFn<Scalar> scale(Scalar a, const GridFn<Scalar>& f) {
  return GridFn<Scalar>(f.space(), a * f.values(), f.variance());
}

/// a * x + y
template <typename Scalar>
GridFn<Scalar> axpy(Scalar a, const GridFn<Scalar>& x, const GridFn<Scalar>& y) {
  detail::require_same_space(x, y, "axpy");
  detail::require_same_variance(x, y, "axpy");
  return GridFn<Scalar>(x.space(), a * x.values() + y.values(), x.variance());
}

template <typename Scalar>
GridFn<Scalar> lincomb(std::initializer_list<Scalar> coeffs, std::initializer_list<GridFn<Scalar>> fns) {
  if (coeffs.size() != fns.size() || fns.size() == 0)
    throw DimensionError("lincomb: need as many coefficients as functions (at least one)");
  auto c = coeffs.begin();
  auto f = fns.begin();
  typename GridFn<Scalar>::Vector acc = *c * f->values();
  const auto& head = *f;
  for (++c, ++f; f != fns.end(); ++c, ++f) {
    detail::require_same_space(head, *f, "lincomb");
    detail::require_same_variance(head, *f, "lincomb");
    acc += *c * f->values();
  }
  return GridFn<Scalar>(head.space(), std::move(acc), head.variance());
}

template <typename Scalar>
GridFn<Scalar> operator+(const GridFn<Scalar>& a, const GridFn<Scalar>& b) {
  return axpy(Scalar(1), a, b);
}

template <typename Scalar>
GridFn<Scalar> operator-(const GridFn<Scalar>& a, const GridFn<Scalar>& b) {
  return axpy(Scalar(-1), b, a);
}

template <typename Scalar>
GridFn<Scalar> operator-(const GridFn<Scalar>& a) {
  return scale(Scalar(-1), a);
}

template <typename Scalar>
GridFn<Scalar> operator*(Scalar a, const GridFn<Scalar>& f) {
  return scale(a, f);
}

/// Pointwise product; the result carries the variance of `b`.
template <typename Scalar>
GridFn<Scalar> hadamard(const GridFn<Scalar>& a, const GridFn<Scalar>& b) {
  detail::require_same_space(a, b, "hadamard");
  return GridFn<Scalar>(b.space(), (a.values().array() * b.values().array()).matrix(), b.variance());
}

}  // namespace nitreg
