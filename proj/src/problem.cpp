#include "saddlekit/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace saddlekit {

std::string to_string(ProblemClass cls) {
  switch (cls) {
    case ProblemClass::LP:
      return "LP";
    case ProblemClass::QP:
      return "QP";
    case ProblemClass::QCQP:
      return "QCQP";
  }
  return "?";
}

namespace {

void check_psd(const Matrix& M, const std::string& name) {
  if (M.size() == 0) return;
  if (!M.allFinite()) throw ValidationError(name + " has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(M, Eigen::EigenvaluesOnly);
  const double smallest = solver.eigenvalues()[0];
  if (smallest < kPsdTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << name << " is not positive semidefinite: smallest eigenvalue " << smallest;
    throw ValidationError(os.str());
  }
}

}  // namespace

ProblemSpec::ProblemSpec(Vector c, std::optional<Matrix> Q,
                         std::vector<Constraint> constraints)
    : c_(std::move(c)), has_Q_(false), constraints_(std::move(constraints)) {
  const Eigen::Index n = c_.size();
  if (n == 0) throw ValidationError("problem must have at least one variable");
  if (constraints_.empty()) throw ValidationError("problem must have at least one constraint");
  if (!c_.allFinite()) throw ValidationError("objective.c has non-finite entries");

  Q_ = Matrix::Zero(n, n);
  if (Q) {
    if (Q->rows() != n || Q->cols() != n)
      throw ValidationError("objective.Q must be n x n");
    check_psd(*Q, "objective.Q");
    Q_ = *Q;
    has_Q_ = Q_.squaredNorm() > 0.0;
  }

  const auto m = static_cast<Eigen::Index>(constraints_.size());
  A_.resize(m, n);
  b_.resize(m);
  bool curved = false;
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::string tag = "constraints[" + std::to_string(j) + "]";
    if (const auto* aff = std::get_if<AffineConstraint>(&constraints_[j])) {
      if (aff->a.size() != n) throw ValidationError(tag + ".a must have length n");
      A_.row(j) = aff->a.transpose();
      b_[j] = aff->b;
    } else {
      const auto& quad = std::get<QuadraticConstraint>(constraints_[j]);
      if (quad.c.size() != n) throw ValidationError(tag + ".c must have length n");
      if (quad.Q.rows() != n || quad.Q.cols() != n)
        throw ValidationError(tag + ".Q must be n x n");
      check_psd(quad.Q, tag + ".Q");
      A_.row(j) = quad.c.transpose();
      b_[j] = quad.b;
      curved = curved || quad.Q.squaredNorm() > 0.0;
    }
  }
  if (!A_.allFinite() || !b_.allFinite())
    throw ValidationError("constraint data has non-finite entries");
  class_ = curved ? ProblemClass::QCQP : (has_Q_ ? ProblemClass::QP : ProblemClass::LP);
}

const Matrix* ProblemSpec::constraint_hessian(int j) const {
  if (const auto* quad = std::get_if<QuadraticConstraint>(&constraints_.at(j))) {
    if (quad->Q.squaredNorm() > 0.0) return &quad->Q;
  }
  return nullptr;
}

double ProblemSpec::objective(const Vector& x) const {
  double v = c_.dot(x);
  if (has_Q_) v += 0.5 * x.dot(Q_ * x);
  return v;
}

Vector ProblemSpec::objective_gradient(const Vector& x) const {
  if (!has_Q_) return c_;
  return c_ + Q_ * x;
}

Vector PrimalDualPoint::stacked() const {
  Vector z(x.size() + y.size());
  z << x, y;
  return z;
}

PrimalDualPoint PrimalDualPoint::from_stacked(const Vector& z, int n) {
  return {z.head(n), z.tail(z.size() - n)};
}

namespace {

void check_x(const ProblemSpec& p, const Vector& x) {
  if (x.size() != p.num_vars()) throw std::invalid_argument("primal dimension mismatch");
}

void check_z(const ProblemSpec& p, const PrimalDualPoint& z) {
  check_x(p, z.x);
  if (z.y.size() != p.num_constraints())
    throw std::invalid_argument("dual dimension mismatch");
}

}  // namespace

Vector eval_G(const ProblemSpec& p, const Vector& x) {
  check_x(p, x);
  Vector g = p.linear_part() * x - p.rhs();
  if (p.problem_class() == ProblemClass::QCQP) {
    for (int j = 0; j < p.num_constraints(); ++j) {
      if (const Matrix* Qj = p.constraint_hessian(j)) g[j] += 0.5 * x.dot(*Qj * x);
    }
  }
  return g;
}

Matrix jacobian_G(const ProblemSpec& p, const Vector& x) {
  check_x(p, x);
  Matrix J = p.linear_part();
  if (p.problem_class() == ProblemClass::QCQP) {
    for (int j = 0; j < p.num_constraints(); ++j) {
      if (const Matrix* Qj = p.constraint_hessian(j)) J.row(j) += (*Qj * x).transpose();
    }
  }
  return J;
}

namespace {

// J_G(x)^T y without materializing J for the affine case.
Vector jacobian_transpose_times(const ProblemSpec& p, const Vector& x, const Vector& y) {
  Vector v = p.linear_part().transpose() * y;
  if (p.problem_class() == ProblemClass::QCQP) {
    for (int j = 0; j < p.num_constraints(); ++j) {
      if (y[j] == 0.0) continue;
      if (const Matrix* Qj = p.constraint_hessian(j)) v += y[j] * (*Qj * x);
    }
  }
  return v;
}

}  // namespace

double dual_value(const ProblemSpec& p, const Vector& y, double tol) {
  if (y.size() != p.num_constraints()) throw std::invalid_argument("dual dimension mismatch");
  if ((y.array() < 0.0).any())
    throw PreconditionError("dual_value requires y >= 0");

  Matrix H = p.Q();
  for (int j = 0; j < p.num_constraints(); ++j) {
    if (const Matrix* Qj = p.constraint_hessian(j)) H += y[j] * *Qj;
  }
  const Vector r = p.c() + p.linear_part().transpose() * y;
  const double constant = -p.rhs().dot(y);
  const double accept = tol * std::max(1.0, r.norm());

  if (H.squaredNorm() == 0.0) {
    return r.norm() <= accept ? constant : -std::numeric_limits<double>::infinity();
  }
  // Minimize 1/2 x^T H x + r^T x: solve H x = -r to full accuracy, then decide
  // consistency from the residual the solve stagnated at.
  const CgResult res = conjugate_gradient(H, -r, kDefaultCgTolerance);
  if (res.status == CgStatus::IterationCap && res.residual_norm > accept)
    throw IterationCapExceeded("dual_value", res.iterations);
  if (res.residual_norm > accept) return -std::numeric_limits<double>::infinity();
  const Vector& xh = res.x;
  return 0.5 * xh.dot(H * xh) + r.dot(xh) + constant;
}

double kkt_residual(const ProblemSpec& p, const PrimalDualPoint& z, double tol) {
  check_z(p, z);
  const Vector g = eval_G(p, z.x);
  const Vector y_plus = z.y.cwiseMax(0.0);

  double gap_block = 0.0;
  const double h = dual_value(p, y_plus, tol);
  if (std::isinf(h)) {
    gap_block = (p.objective_gradient(z.x) + jacobian_transpose_times(p, z.x, y_plus)).norm();
  } else {
    gap_block = std::max(p.objective(z.x) - h, 0.0);
  }
  const double primal = g.cwiseMax(0.0).squaredNorm();
  const double dual = (-z.y).cwiseMax(0.0).squaredNorm();
  return std::sqrt(gap_block * gap_block + primal + dual);
}

SubdiffDistance saddle_dist(const ProblemSpec& p, const PrimalDualPoint& z) {
  check_z(p, z);
  SubdiffDistance out;
  if ((z.y.array() < 0.0).any()) {
    const double inf = std::numeric_limits<double>::infinity();
    out.value = out.stationarity_part = out.primal_part_active = out.primal_part_inactive = inf;
    return out;
  }
  const Vector g = eval_G(p, z.x);
  out.stationarity_part =
      (p.objective_gradient(z.x) + jacobian_transpose_times(p, z.x, z.y)).norm();
  double active = 0.0;
  double inactive = 0.0;
  for (int j = 0; j < p.num_constraints(); ++j) {
    if (z.y[j] == 0.0) {
      const double v = std::max(g[j], 0.0);
      inactive += v * v;
    } else {
      active += g[j] * g[j];
    }
  }
  out.primal_part_active = std::sqrt(active);
  out.primal_part_inactive = std::sqrt(inactive);
  out.value = std::sqrt(out.stationarity_part * out.stationarity_part + active + inactive);
  return out;
}

LagrangianGradients lagrangian_grads(const ProblemSpec& p, const PrimalDualPoint& z) {
  check_z(p, z);
  return {p.objective_gradient(z.x) + jacobian_transpose_times(p, z.x, z.y), eval_G(p, z.x)};
}

}  // namespace saddlekit
