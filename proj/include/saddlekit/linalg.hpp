#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace saddlekit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The right-hand side has a component outside range(M) larger than the
/// requested tolerance.
class RangeViolation : public LinalgError {
 public:
  RangeViolation(double residual, double tolerance);
  double residual() const { return residual_; }

 private:
  double residual_;
};

class IterationCapExceeded : public LinalgError {
 public:
  IterationCapExceeded(const std::string& what_for, long cap);
  long cap() const { return cap_; }

 private:
  long cap_;
};

inline constexpr double kDefaultCgTolerance = 1e-12;

/// Largest singular value of A by power iteration on A^T A.
///
/// The starting vector is the constant vector (1, ..., 1)/sqrt(n), perturbed
/// by a fixed ramp so that it is never orthogonal to the leading singular
/// vector of the matrices we care about. Iterates until two successive
/// Rayleigh quotients agree to `tol` (relative).
double op_norm(const Matrix& A, double tol = 1e-12, long max_iters = 1'000'000);

enum class CgStatus { Converged, Stagnated, IterationCap };

struct CgResult {
  Vector x;
  double residual_norm = 0.0;
  long iterations = 0;
  CgStatus status = CgStatus::Converged;
};

/// Conjugate gradients for symmetric positive semidefinite M, started at 0.
/// Stops when ||Mx - rhs|| <= tol * max(1, ||rhs||). For singular M with an
/// inconsistent right-hand side the curvature p^T M p collapses and the run
/// reports Stagnated with the best iterate found.
CgResult conjugate_gradient(const Matrix& M, const Vector& rhs, double tol,
                            long max_iters = -1);

/// Solves Mx = rhs for symmetric PSD M. Throws RangeViolation when rhs is not
/// in range(M) within tolerance and IterationCapExceeded otherwise.
Vector solve_spd(const Matrix& M, const Vector& rhs,
                 double tol = kDefaultCgTolerance);

/// Jacobi-preconditioned CG bound to one matrix, for repeated solves.
class SpdSystem {
 public:
  explicit SpdSystem(Matrix M, double tol = kDefaultCgTolerance);

  Vector solve(const Vector& rhs) const;
  const Matrix& matrix() const { return M_; }

 private:
  Matrix M_;
  Vector inv_diag_;
  double tol_;
};

enum class SeminormKind { ScaledIdentity, Pdhg, Admm };

/// The algorithm-specific (semi)norm ||z||_P = sqrt(z^T P z) on z = (x, y).
///
///   scaled-identity(eta): P = I / eta
///   pdhg(eta, A):         P = [I/eta, -A^T; -A, I/eta]
///   admm(eta, A):         P = [eta A^T A, A^T; A, I/eta]   (PSD, singular)
class PSeminorm {
 public:
  static PSeminorm scaled_identity(double eta, int n, int m);
  static PSeminorm pdhg(double eta, Matrix A);
  static PSeminorm admm(double eta, Matrix A);

  SeminormKind kind() const { return kind_; }
  double eta() const { return eta_; }
  int primal_dim() const { return n_; }
  int dual_dim() const { return m_; }
  const Matrix& A() const { return A_; }

  double eval(const Vector& x, const Vector& y) const;
  /// Evaluates on a stacked (x, y) vector.
  double eval(const Vector& z) const;

  /// Explicit (n+m)x(n+m) matrix.
  Matrix dense() const;

  /// Whether the kind's positive-definiteness hypothesis holds: always for
  /// scaled-identity, eta * ||A||_op < 1 for pdhg, never for admm.
  bool positive_definite_predicate() const;

 private:
  PSeminorm(SeminormKind kind, double eta, Matrix A, int n, int m);

  SeminormKind kind_;
  double eta_;
  Matrix A_;
  int n_;
  int m_;
};

struct EigenExtremes {
  double max = 0.0;
  /// Smallest eigenvalue strictly above the numerical-zero threshold.
  double min_positive = 0.0;
  /// Smallest eigenvalue of the full matrix (may be <= 0).
  double min = 0.0;
};

inline constexpr int kDenseEigenLimit = 2000;

EigenExtremes eigen_extremes(const PSeminorm& P,
                             int dense_limit = kDenseEigenLimit);

}  // namespace saddlekit
