#include "saddlekit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace saddlekit {

namespace {

std::string range_message(double residual, double tolerance) {
  std::ostringstream os;
  os.precision(6);
  os << "right-hand side outside range of matrix: residual " << residual
     << " exceeds tolerance " << tolerance;
  return os.str();
}

std::string cap_message(const std::string& what_for, long cap) {
  return what_for + ": no convergence within iteration cap of " +
         std::to_string(cap);
}

// Fixed power-iteration seed: v_i = 1 + (i + 1) / (n + 1), normalized.
Vector ramp_seed(Eigen::Index n, int variant) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    v[i] = variant == 0 ? 1.0 + t : std::cos(3.0 * static_cast<double>(i) + 1.0);
  }
  return v / v.norm();
}

// Largest eigenvalue of the PSD operator v -> apply(v) by power iteration
// with a residual stopping rule: ||Bv - lambda v|| <= tol * lambda.
template <typename Apply>
double power_iteration(Eigen::Index n, const Apply& apply, double tol,
                       long max_iters, const Vector& seed,
                       const std::string& what_for) {
  Vector v = seed;
  for (long it = 0; it < max_iters; ++it) {
    Vector w = apply(v);
    const double lambda = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    const double residual = (w - lambda * v).norm();
    if (residual <= tol * std::abs(lambda)) return lambda;
    v = w / wn;
  }
  (void)n;
  throw IterationCapExceeded(what_for, max_iters);
}

}  // namespace

RangeViolation::RangeViolation(double residual, double tolerance)
    : LinalgError(range_message(residual, tolerance)), residual_(residual) {}

IterationCapExceeded::IterationCapExceeded(const std::string& what_for, long cap)
    : LinalgError(cap_message(what_for, cap)), cap_(cap) {}

double op_norm(const Matrix& A, double tol, long max_iters) {
  if (A.size() == 0) throw std::invalid_argument("op_norm: empty matrix");
  if (!(tol > 0.0)) throw std::invalid_argument("op_norm: tol must be positive");
  const double fro2 = A.squaredNorm();
  if (fro2 == 0.0) throw std::invalid_argument("op_norm: zero matrix");
  const Eigen::Index n = A.cols();
  auto apply = [&A](const Vector& v) -> Vector { return A.transpose() * (A * v); };
  // sigma_max^2 >= ||A||_F^2 / rank; a smaller converged value means the
  // seed was orthogonal to the top singular vector.
  const double floor = fro2 / static_cast<double>(std::min(A.rows(), A.cols()));
  for (int variant = 0; variant < 2; ++variant) {
    const double lambda =
        power_iteration(n, apply, tol, max_iters, ramp_seed(n, variant), "op_norm");
    if (lambda >= floor * (1.0 - 1e-9)) return std::sqrt(lambda);
  }
  throw LinalgError("op_norm: power iteration converged to a non-dominant singular value");
}

namespace {

CgResult run_cg(const Matrix& M, const Vector& rhs, double tol, long max_iters,
                const Vector* inv_diag) {
  const Eigen::Index n = rhs.size();
  if (M.rows() != n || M.cols() != n)
    throw std::invalid_argument("conjugate_gradient: dimension mismatch");
  if (max_iters < 0) max_iters = std::max<long>(100, 20 * static_cast<long>(n));

  CgResult out;
  out.x = Vector::Zero(n);
  const double threshold = tol * std::max(1.0, rhs.norm());
  const double scale = std::max(M.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  auto precondition = [inv_diag](const Vector& r) -> Vector {
    return inv_diag ? Vector(inv_diag->cwiseProduct(r)) : r;
  };

  Vector r = rhs;
  out.residual_norm = r.norm();
  if (out.residual_norm <= threshold) return out;

  Vector s = precondition(r);
  Vector p = s;
  double rs = r.dot(s);
  for (long it = 0; it < max_iters; ++it) {
    Vector Mp = M * p;
    const double curvature = p.dot(Mp);
    if (curvature <= 1e-14 * scale * p.squaredNorm()) {
      out.status = CgStatus::Stagnated;
      out.iterations = it;
      out.residual_norm = (rhs - M * out.x).norm();
      if (out.residual_norm <= threshold) out.status = CgStatus::Converged;
      return out;
    }
    const double alpha = rs / curvature;
    out.x += alpha * p;
    r -= alpha * Mp;
    out.iterations = it + 1;
    if (r.norm() <= threshold) {
      // Guard against drift of the recursive residual.
      r = rhs - M * out.x;
      out.residual_norm = r.norm();
      if (out.residual_norm <= threshold) return out;
    }
    s = precondition(r);
    const double rs_next = r.dot(s);
    p = s + (rs_next / rs) * p;
    rs = rs_next;
  }
  out.residual_norm = (rhs - M * out.x).norm();
  out.status = out.residual_norm <= threshold ? CgStatus::Converged : CgStatus::IterationCap;
  return out;
}

Vector finish_solve(const CgResult& res, double tol, const Vector& rhs, long cap) {
  switch (res.status) {
    case CgStatus::Converged:
      return res.x;
    case CgStatus::Stagnated:
      throw RangeViolation(res.residual_norm, tol * std::max(1.0, rhs.norm()));
    case CgStatus::IterationCap:
      break;
  }
  throw IterationCapExceeded("solve_spd", cap);
}

}  // namespace

CgResult conjugate_gradient(const Matrix& M, const Vector& rhs, double tol,
                            long max_iters) {
  return run_cg(M, rhs, tol, max_iters, nullptr);
}

Vector solve_spd(const Matrix& M, const Vector& rhs, double tol) {
  const long cap = std::max<long>(100, 20 * static_cast<long>(rhs.size()));
  return finish_solve(run_cg(M, rhs, tol, cap, nullptr), tol, rhs, cap);
}

SpdSystem::SpdSystem(Matrix M, double tol) : M_(std::move(M)), tol_(tol) {
  inv_diag_ = Vector::Ones(M_.rows());
  for (Eigen::Index i = 0; i < M_.rows(); ++i) {
    const double d = M_(i, i);
    if (d > 0.0) inv_diag_[i] = 1.0 / d;
  }
}

Vector SpdSystem::solve(const Vector& rhs) const {
  const long cap = std::max<long>(100, 20 * static_cast<long>(rhs.size()));
  return finish_solve(run_cg(M_, rhs, tol_, cap, &inv_diag_), tol_, rhs, cap);
}

// ---------------------------------------------------------------------------

PSeminorm::PSeminorm(SeminormKind kind, double eta, Matrix A, int n, int m)
    : kind_(kind), eta_(eta), A_(std::move(A)), n_(n), m_(m) {
  if (!(eta > 0.0)) throw std::invalid_argument("PSeminorm: stepsize must be positive");
}

PSeminorm PSeminorm::scaled_identity(double eta, int n, int m) {
  return PSeminorm(SeminormKind::ScaledIdentity, eta, Matrix(), n, m);
}

PSeminorm PSeminorm::pdhg(double eta, Matrix A) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  return PSeminorm(SeminormKind::Pdhg, eta, std::move(A), n, m);
}

PSeminorm PSeminorm::admm(double eta, Matrix A) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  return PSeminorm(SeminormKind::Admm, eta, std::move(A), n, m);
}

double PSeminorm::eval(const Vector& x, const Vector& y) const {
  if (x.size() != n_ || y.size() != m_)
    throw std::invalid_argument("PSeminorm::eval: dimension mismatch");
  switch (kind_) {
    case SeminormKind::ScaledIdentity:
      return std::sqrt(x.squaredNorm() + y.squaredNorm()) / std::sqrt(eta_);
    case SeminormKind::Pdhg: {
      const double q =
          (x.squaredNorm() + y.squaredNorm()) / eta_ - 2.0 * y.dot(A_ * x);
      return std::sqrt(std::max(q, 0.0));
    }
    case SeminormKind::Admm:
      return std::sqrt(eta_) * (A_ * x + y / eta_).norm();
  }
  return 0.0;
}

double PSeminorm::eval(const Vector& z) const {
  if (z.size() != n_ + m_) throw std::invalid_argument("PSeminorm::eval: dimension mismatch");
  return eval(Vector(z.head(n_)), Vector(z.tail(m_)));
}

Matrix PSeminorm::dense() const {
  const int d = n_ + m_;
  Matrix P = Matrix::Zero(d, d);
  switch (kind_) {
    case SeminormKind::ScaledIdentity:
      P.diagonal().setConstant(1.0 / eta_);
      break;
    case SeminormKind::Pdhg:
      P.diagonal().setConstant(1.0 / eta_);
      P.topRightCorner(n_, m_) = -A_.transpose();
      P.bottomLeftCorner(m_, n_) = -A_;
      break;
    case SeminormKind::Admm:
      P.topLeftCorner(n_, n_) = eta_ * A_.transpose() * A_;
      P.topRightCorner(n_, m_) = A_.transpose();
      P.bottomLeftCorner(m_, n_) = A_;
      P.bottomRightCorner(m_, m_).diagonal().setConstant(1.0 / eta_);
      break;
  }
  return P;
}

bool PSeminorm::positive_definite_predicate() const {
  switch (kind_) {
    case SeminormKind::ScaledIdentity:
      return true;
    case SeminormKind::Pdhg:
      return A_.squaredNorm() == 0.0 || eta_ * op_norm(A_) < 1.0;
    case SeminormKind::Admm:
      return false;
  }
  return false;
}

namespace {

EigenExtremes dense_extremes(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(P, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw LinalgError("eigen_extremes: eigensolver failed");
  const Vector& ev = solver.eigenvalues();  // ascending
  EigenExtremes out;
  out.max = ev[ev.size() - 1];
  out.min = ev[0];
  const double zero = 1e-12 * std::max(1.0, std::abs(out.max));
  out.min_positive = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > zero) {
      out.min_positive = ev[i];
      break;
    }
  }
  return out;
}

// Extremes of a symmetric operator via power iteration on B and on
// (lambda_max I - B).
template <typename Apply>
EigenExtremes iterative_extremes(Eigen::Index d, const Apply& apply) {
  const double top = power_iteration(d, apply, 1e-10, 1'000'000, ramp_seed(d, 0),
                                     "eigen_extremes");
  auto shifted = [&](const Vector& v) -> Vector { return top * v - apply(v); };
  const double gap = power_iteration(d, shifted, 1e-10, 1'000'000, ramp_seed(d, 1),
                                     "eigen_extremes");
  EigenExtremes out;
  out.max = top;
  out.min = top - gap;
  out.min_positive = out.min;
  return out;
}

}  // namespace

EigenExtremes eigen_extremes(const PSeminorm& P, int dense_limit) {
  const int n = P.primal_dim();
  const int m = P.dual_dim();
  const double eta = P.eta();
  switch (P.kind()) {
    case SeminormKind::ScaledIdentity:
      return {1.0 / eta, 1.0 / eta, 1.0 / eta};
    case SeminormKind::Admm: {
      // P = M M^T with M = [sqrt(eta) A^T; I / sqrt(eta)], so the nonzero
      // spectrum of P is the spectrum of M^T M = eta A A^T + I / eta.
      EigenExtremes out;
      if (n + m <= dense_limit) {
        out = dense_extremes(P.dense());
      } else {
        const Matrix& A = P.A();
        auto gram = [&](const Vector& v) -> Vector {
          return eta * (A * (A.transpose() * v)) + v / eta;
        };
        out = iterative_extremes(m, gram);
        out.min = n > 0 ? 0.0 : out.min;
      }
      return out;
    }
    case SeminormKind::Pdhg: {
      if (n + m <= dense_limit) return dense_extremes(P.dense());
      const Matrix& A = P.A();
      auto apply = [&](const Vector& z) -> Vector {
        Vector out(n + m);
        out.head(n) = z.head(n) / eta - A.transpose() * z.tail(m);
        out.tail(m) = z.tail(m) / eta - A * z.head(n);
        return out;
      };
      EigenExtremes out = iterative_extremes(n + m, apply);
      if (out.min <= 0.0) out.min_positive = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
  }
  return {};
}

}  // namespace saddlekit
