#pragma once

#include "saddlekit/problem.hpp"
#include "saddlekit/solution_set.hpp"
#include "saddlekit/solvers.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace saddlekit {

struct InstanceDescriptor {
  std::string name;
  ProblemSpec spec;
  std::optional<KnownSolution> known_solution;
  /// One entry per algorithm applicable to the problem class.
  std::map<Algorithm, SolverConfig> recommended;
  std::string citations;
  /// Tolerance used for partitions and trace snapshots.
  double default_eps = 1e-10;
  /// Strictly feasible point a random instance was built around.
  std::optional<Vector> feasible_point;
};

/// Degenerate two-variable QP: Q = U diag(1, 0) U^T with U the rotation by
/// pi/64, c = (0, -1), four affine rows built from zeta = 1/6, kappa = 1/2
/// and a shift of 2^-10. The solution is a single x* and a segment of
/// multipliers; the endpoint with y_2 = 0 is the one first-order methods
/// reach from zero.
InstanceDescriptor intro_qp();

/// min <c, x> s.t. <c, x> >= ||c||_1, x >= 0 with c = (c1, sqrt(1 - c1^2)).
/// Throws std::invalid_argument unless 0 < c1 < 1.
InstanceDescriptor rotated_house(double c1 = 0.6);

/// min x s.t. -x <= 0, solution (0, 1).
InstanceDescriptor trivial_lp();

struct RandomOptions {
  /// Run every applicable solver and resample when one fails to reach
  /// KKT <= 1e-6 within 1e5 iterations.
  bool verify = true;
  int max_attempts = 10;
};

class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

InstanceDescriptor random_lp(std::uint64_t seed, int n, int m, double density,
                             const RandomOptions& options = {});
InstanceDescriptor random_qp(std::uint64_t seed, int n, int m, int rank,
                             const RandomOptions& options = {});
InstanceDescriptor random_qcqp(std::uint64_t seed, int n, int m,
                               const RandomOptions& options = {});

/// Stepsizes shared by every built-in: 0.99/||A|| for PDHG and ADMM,
/// 0.99 / sqrt((||Q|| + ||A||)^2 + ||A||^2) for EGM, and the shared
/// automatic rule for QCQP.
std::map<Algorithm, SolverConfig> default_configs(const ProblemSpec& p);

std::vector<Algorithm> applicable_algorithms(const ProblemSpec& p);

/// Resolves "builtin:<name>" (intro-qp, rotated-house, trivial-lp) or a
/// problem file path. c1 applies to rotated-house only.
InstanceDescriptor resolve_instance(const std::string& ref, double c1 = 0.6);

std::vector<std::string> builtin_names();

}  // namespace saddlekit
