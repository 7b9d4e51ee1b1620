#include "nitreg/operators.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

namespace nitreg {

void ForwardOp::check_domain(const GridFnd& x, const char* what) const {
  if (!(*x.space() == *domain_space()))
    throw DimensionError(std::string(what) + ": argument is not in the domain space");
  detail::require_finite(x, what);
}

void ForwardOp::check_range(const GridFnd& y, const char* what) const {
  if (!(*y.space() == *range_space()))
    throw DimensionError(std::string(what) + ": argument is not in the range space");
  detail::require_finite(y, what);
}

// ---------------------------------------------------------------------------
// IntegralOp

IntegralOp::IntegralOp(int intervals, double exponent) : space_(GridSpaced::interval(intervals, exponent)) {
  const int n = space_->node_count();
  kernel_.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) kernel_(i, j) = kernel(space_->coordinate(i, 0), space_->coordinate(j, 0));
}

GridFnd IntegralOp::apply(const GridFnd& x) const {
  check_domain(x, "IntegralOp::apply");
  Eigen::VectorXd wx = space_->weights().cwiseProduct(x.values());
  return GridFnd(space_, kernel_ * wx);
}

GridFnd IntegralOp::deriv(const GridFnd& x, const GridFnd& h) const {
  check_domain(x, "IntegralOp::deriv");
  return apply(h);
}

GridFnd IntegralOp::adjoint(const GridFnd& x, const GridFnd& w) const {
  check_domain(x, "IntegralOp::adjoint");
  check_range(w, "IntegralOp::adjoint");
  // (A^* w)_j = sum_i K(s_i, t_j) w_i v_i, exact for the weighted pairings.
  Eigen::VectorXd ww = space_->weights().cwiseProduct(w.values());
  return GridFnd(space_, kernel_.transpose() * ww, Variance::Dual);
}

// ---------------------------------------------------------------------------
// EllipticOp

struct EllipticOp::Factorization {
  Eigen::VectorXd c_interior;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  Eigen::VectorXd u_interior;
};

EllipticOp::EllipticOp(int nx, int ny, GridFnd source, GridFnd boundary)
    : space_(GridSpaced::unit_square(nx, ny)), source_(std::move(source)), boundary_(std::move(boundary)) {
  if (nx < 2 || ny < 2) throw ParameterError("EllipticOp: need at least 2x2 cells for an interior node");
  if (!(*source_.space() == *space_) || !(*boundary_.space() == *space_))
    throw DimensionError("EllipticOp: source and boundary data must live on the " + space_->describe() + " grid");
  detail::require_finite(source_, "EllipticOp source");
  detail::require_finite(boundary_, "EllipticOp boundary");

  const int nodes = space_->node_count();
  unknown_of_.assign(nodes, -1);
  for (int k = 0; k < nodes; ++k) {
    if (!space_->on_boundary(k)) {
      unknown_of_[k] = static_cast<int>(interior_.size());
      interior_.push_back(k);
    }
  }

  const double ihx2 = 1.0 / (space_->spacing(0) * space_->spacing(0));
  const double ihy2 = 1.0 / (space_->spacing(1) * space_->spacing(1));
  const int m = static_cast<int>(interior_.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(5 * m);
  boundary_rhs_.resize(m);
  for (int row = 0; row < m; ++row) {
    const int k = interior_[row];
    const int i = k % space_->dims()[0], j = k / space_->dims()[0];
    trips.emplace_back(row, row, 2.0 * ihx2 + 2.0 * ihy2);
    double rhs = source_[k];
    const std::pair<int, double> nbrs[] = {{space_->index(i - 1, j), ihx2},
                                           {space_->index(i + 1, j), ihx2},
                                           {space_->index(i, j - 1), ihy2},
                                           {space_->index(i, j + 1), ihy2}};
    for (auto [nb, coef] : nbrs) {
      if (unknown_of_[nb] >= 0) {
        trips.emplace_back(row, unknown_of_[nb], -coef);
      } else {
        rhs += coef * boundary_[nb];
      }
    }
    boundary_rhs_(row) = rhs;
  }
  laplacian_.resize(m, m);
  laplacian_.setFromTriplets(trips.begin(), trips.end());
}

std::unique_ptr<EllipticOp> EllipticOp::with_linear_state(const GridFnd& c_exact) {
  const auto& sp = c_exact.space();
  if (sp->dimension() != 2) throw DimensionError("EllipticOp: exact parameter must live on a 2-D grid");
  auto g = GridFnd::sample(sp, [](double x, double y) { return x + y; });
  auto f = hadamard(c_exact, g);
  return std::make_unique<EllipticOp>(sp->cells(0), sp->cells(1), std::move(f), std::move(g));
}

Eigen::VectorXd EllipticOp::gather_interior(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(interior_.size());
  for (std::size_t r = 0; r < interior_.size(); ++r) out(r) = full(interior_[r]);
  return out;
}

std::uint64_t EllipticOp::factorizations() const {
  std::lock_guard lock(cache_mutex_);
  return factorizations_;
}

std::shared_ptr<const EllipticOp::Factorization> EllipticOp::factorize(const GridFnd& c) const {
  Eigen::VectorXd ci = gather_interior(c.values());
  std::lock_guard lock(cache_mutex_);
  if (cache_ && cache_->c_interior.size() == ci.size() && cache_->c_interior == ci) return cache_;

  auto fac = std::make_shared<Factorization>();
  fac->c_interior = std::move(ci);
  Eigen::SparseMatrix<double> a = laplacian_;
  for (int r = 0; r < a.rows(); ++r) a.coeffRef(r, r) += fac->c_interior(r);
  fac->solver.compute(a);
  if (fac->solver.info() != Eigen::Success || !(fac->solver.vectorD().minCoeff() > 0.0)) {
    std::ostringstream os;
    os << "EllipticOp: A(c) is not positive definite for c with min " << fac->c_interior.minCoeff() << ", max "
       << fac->c_interior.maxCoeff() << ", interior l2 norm " << fac->c_interior.norm();
    throw OperatorError(os.str());
  }
  fac->u_interior = fac->solver.solve(boundary_rhs_);
  ++factorizations_;
  cache_ = fac;
  return fac;
}

GridFnd EllipticOp::apply(const GridFnd& c) const {
  check_domain(c, "EllipticOp::apply");
  auto fac = factorize(c);
  Eigen::VectorXd u = boundary_.values();
  for (std::size_t r = 0; r < interior_.size(); ++r) u(interior_[r]) = fac->u_interior(r);
  return GridFnd(space_, std::move(u));
}

GridFnd EllipticOp::deriv(const GridFnd& c, const GridFnd& h) const {
  check_domain(c, "EllipticOp::deriv");
  check_domain(h, "EllipticOp::deriv");
  auto fac = factorize(c);
  Eigen::VectorXd rhs = -gather_interior(h.values()).cwiseProduct(fac->u_interior);
  Eigen::VectorXd v = fac->solver.solve(rhs);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space_->node_count());
  for (std::size_t r = 0; r < interior_.size(); ++r) out(interior_[r]) = v(r);
  return GridFnd(space_, std::move(out));
}

GridFnd EllipticOp::adjoint(const GridFnd& c, const GridFnd& w) const {
  check_domain(c, "EllipticOp::adjoint");
  check_range(w, "EllipticOp::adjoint");
  auto fac = factorize(c);
  // <F'(c)h, w> = -(W w)^T A^{-1} (u h) on the unknowns, so the weighted-pairing
  // adjoint is z = -u A^{-1}(W w) / W; A(c) is symmetric.
  Eigen::VectorXd wi = gather_interior(space_->weights()).cwiseProduct(gather_interior(w.values()));
  Eigen::VectorXd z = fac->solver.solve(wi);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space_->node_count());
  for (std::size_t r = 0; r < interior_.size(); ++r) {
    const int k = interior_[r];
    out(k) = -fac->u_interior(r) * z(r) / space_->weights()(k);
  }
  return GridFnd(space_, std::move(out), Variance::Dual);
}

// ---------------------------------------------------------------------------

double estimate_eta(const ForwardOp& op, const GridFnd& x0, double radius, int samples, std::uint64_t seed) {
  if (samples < 1) throw ParameterError("estimate_eta: samples must be at least 1");
  if (!(radius > 0.0)) throw ParameterError("estimate_eta: radius must be positive");
  if (op.is_linear()) return 0.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  auto draw = [&] {
    Eigen::VectorXd d(x0.size());
    for (int k = 0; k < d.size(); ++k) d(k) = gauss(rng);
    GridFnd dir(x0.space(), std::move(d));
    return axpy(radius * unit(rng) / norm(dir), dir, x0);
  };

  double eta = 0.0;
  for (int s = 0; s < samples; ++s) {
    GridFnd x = draw(), xb = draw();
    try {
      GridFnd fx = op.apply(x);
      GridFnd diff = op.apply(xb) - fx;
      double denom = norm(diff);
      if (denom == 0.0) continue;
      GridFnd lin = diff - op.deriv(x, xb - x);
      eta = std::max(eta, norm(lin) / denom);
    } catch (const OperatorError&) {
      // pair left the region where F is defined
    }
  }
  return eta;
}

}  // namespace nitreg
