#pragma once

#include "saddlekit/linalg.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace saddlekit {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// <a, x> - b <= 0
struct AffineConstraint {
  Vector a;
  double b = 0.0;
};

/// <c, x> + 1/2 <x, Q x> - b <= 0, Q symmetric PSD
struct QuadraticConstraint {
  Vector c;
  Matrix Q;
  double b = 0.0;
};

using Constraint = std::variant<AffineConstraint, QuadraticConstraint>;

enum class ProblemClass { LP, QP, QCQP };

std::string to_string(ProblemClass cls);

inline constexpr double kPsdTolerance = -1e-10;

/// min <c, x> + 1/2 <x, Q x>  s.t.  g_j(x) <= 0, j = 1..m.
///
/// Immutable after construction. The constructor checks dimensions and that
/// Q and every Q_j have smallest eigenvalue >= -1e-10; violations throw
/// ValidationError naming the offending matrix and its smallest eigenvalue.
class ProblemSpec {
 public:
  ProblemSpec(Vector c, std::optional<Matrix> Q, std::vector<Constraint> constraints);

  int num_vars() const { return static_cast<int>(c_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }

  const Vector& c() const { return c_; }
  /// Objective Hessian; the zero matrix when the objective is linear.
  const Matrix& Q() const { return Q_; }
  bool has_quadratic_objective() const { return has_Q_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  ProblemClass problem_class() const { return class_; }
  /// True when every constraint has zero curvature, so G(x) = Ax - b.
  bool affine_constraints() const { return class_ != ProblemClass::QCQP; }

  /// Row j is a_j (affine) or c_j (quadratic).
  const Matrix& linear_part() const { return A_; }
  const Vector& rhs() const { return b_; }
  /// Curvature of constraint j, or nullptr for affine rows.
  const Matrix* constraint_hessian(int j) const;

  double objective(const Vector& x) const;
  Vector objective_gradient(const Vector& x) const;

 private:
  Vector c_;
  Matrix Q_;
  bool has_Q_;
  std::vector<Constraint> constraints_;
  Matrix A_;
  Vector b_;
  ProblemClass class_;
};

/// z = (x, y). y >= 0 is not enforced here.
struct PrimalDualPoint {
  Vector x;
  Vector y;

  Vector stacked() const;
  static PrimalDualPoint from_stacked(const Vector& z, int n);
};

/// dist(0, F(z)) split into its three blocks. primal_part_active covers
/// constraints with y_j != 0 (their full value g_j counts), and
/// primal_part_inactive covers y_j == 0 (only the positive part counts).
struct SubdiffDistance {
  double value = 0.0;
  double stationarity_part = 0.0;
  double primal_part_active = 0.0;
  double primal_part_inactive = 0.0;
};

struct LagrangianGradients {
  Vector gx;
  Vector gy;
};

inline constexpr double kDualRangeTolerance = 1e-9;

Vector eval_G(const ProblemSpec& p, const Vector& x);
Matrix jacobian_G(const ProblemSpec& p, const Vector& x);

/// h(y) = min_x f(x) + <y, G(x)>, or -infinity when the inner problem is
/// unbounded. The inner gradient r(y) counts as lying in range(H(y)) when
/// the conjugate-gradient residual stagnates at or below
/// tol * max(1, ||r||). Throws PreconditionError for y with a negative entry.
double dual_value(const ProblemSpec& p, const Vector& y, double tol = kDualRangeTolerance);

/// || [(f - h)_+; G(x)_+; (-y)_+] ||_2. When h(y) = -infinity the first
/// block is replaced by ||grad f(x) + J_G(x)^T max(y, 0)||_2.
double kkt_residual(const ProblemSpec& p, const PrimalDualPoint& z,
                    double tol = kDualRangeTolerance);

/// Exact distance from 0 to the saddle subdifferential; +infinity when some
/// y_j < 0. Multipliers count as zero only when exactly 0.0.
SubdiffDistance saddle_dist(const ProblemSpec& p, const PrimalDualPoint& z);

/// gx = grad f(x) + J_G(x)^T y, gy = G(x).
LagrangianGradients lagrangian_grads(const ProblemSpec& p, const PrimalDualPoint& z);

}  // namespace saddlekit
