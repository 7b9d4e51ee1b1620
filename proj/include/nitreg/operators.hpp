#pragma once

#include <cstdint>
#include <memory>
#include <mutex>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nitreg/spaces.hpp"

namespace nitreg {

/// Forward operator F: X -> Y with Frechet derivative and its adjoint.
///
/// Adjoints are exact with respect to the quadrature pairings of the two spaces:
/// pairing(w, deriv(x, h)) == pairing(adjoint(x, w), h) up to rounding.
class ForwardOp {
 public:
  virtual ~ForwardOp() = default;

  virtual const SpacePtrd& domain_space() const = 0;
  virtual const SpacePtrd& range_space() const = 0;
  virtual bool is_linear() const = 0;

  virtual GridFnd apply(const GridFnd& x) const = 0;
  /// F'(x) h
  virtual GridFnd deriv(const GridFnd& x, const GridFnd& h) const = 0;
  /// F'(x)^* w, returned as a dual element of X.
  virtual GridFnd adjoint(const GridFnd& x, const GridFnd& w) const = 0;

 protected:
  void check_domain(const GridFnd& x, const char* what) const;
  void check_range(const GridFnd& y, const char* what) const;
};

/// A x(s) = int_0^1 K(s, t) x(t) dt with K(s, t) = 40 s (1 - t) for s <= t and
/// 40 t (1 - s) otherwise, discretized by the trapezoidal rule.
class IntegralOp final : public ForwardOp {
 public:
  explicit IntegralOp(int intervals = 400, double exponent = 2.0);

  static double kernel(double s, double t) { return s <= t ? 40.0 * s * (1.0 - t) : 40.0 * t * (1.0 - s); }

  const SpacePtrd& domain_space() const override { return space_; }
  const SpacePtrd& range_space() const override { return space_; }
  bool is_linear() const override { return true; }

  GridFnd apply(const GridFnd& x) const override;
  GridFnd deriv(const GridFnd& x, const GridFnd& h) const override;
  GridFnd adjoint(const GridFnd& x, const GridFnd& w) const override;

  /// Nodal kernel values K(s_i, t_j) (without quadrature weights).
  const Eigen::MatrixXd& kernel_matrix() const { return kernel_; }

 private:
  SpacePtrd space_;
  Eigen::MatrixXd kernel_;
};

/// Parameter-to-state map c -> u(c) for -Lap u + c u = f in the unit square,
/// u = g on the boundary, with the 5-point finite-difference Laplacian.
///
/// X and Y are the same full nodal grid. Boundary values of c do not enter the
/// discrete equations; boundary values of u are fixed to g.
class EllipticOp final : public ForwardOp {
 public:
  EllipticOp(int nx, int ny, GridFnd source, GridFnd boundary);

  /// Source and boundary data that make u(c_exact) = x + y exactly (the discrete
  /// Laplacian of a linear function vanishes): f = c_exact * (x + y), g = x + y.
  static std::unique_ptr<EllipticOp> with_linear_state(const GridFnd& c_exact);

  const SpacePtrd& domain_space() const override { return space_; }
  const SpacePtrd& range_space() const override { return space_; }
  bool is_linear() const override { return false; }

  GridFnd apply(const GridFnd& c) const override;
  GridFnd deriv(const GridFnd& c, const GridFnd& h) const override;
  GridFnd adjoint(const GridFnd& c, const GridFnd& w) const override;

  const GridFnd& source() const { return source_; }
  const GridFnd& boundary() const { return boundary_; }
  int interior_count() const { return static_cast<int>(interior_.size()); }

  /// Number of factorizations computed so far (cache misses).
  std::uint64_t factorizations() const;

 private:
  struct Factorization;
  std::shared_ptr<const Factorization> factorize(const GridFnd& c) const;
  Eigen::VectorXd gather_interior(const Eigen::VectorXd& full) const;

  SpacePtrd space_;
  GridFnd source_;
  GridFnd boundary_;
  std::vector<int> interior_;       // flat node index of every interior unknown
  std::vector<int> unknown_of_;     // node -> unknown index, -1 on the boundary
  Eigen::SparseMatrix<double> laplacian_;
  Eigen::VectorXd boundary_rhs_;    // f + boundary coupling of g, on the unknowns

  mutable std::mutex cache_mutex_;
  mutable std::shared_ptr<const Factorization> cache_;
  mutable std::uint64_t factorizations_ = 0;
};

/// Sampling estimate of the tangential-cone constant
///   max ||F(xb) - F(x) - F'(x)(xb - x)|| / ||F(xb) - F(x)||
/// over random pairs in the ball of `radius` around x0. Exactly zero for linear F.
double estimate_eta(const ForwardOp& op, const GridFnd& x0, double radius, int samples,
                    std::uint64_t seed = 7);

}  // namespace nitreg
