#pragma once

#include "saddlekit/linalg.hpp"
#include "saddlekit/problem.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace saddlekit {

enum class Algorithm { Pdhg, Admm, Egm };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);

class UnsupportedAlgorithm : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long iteration, double norm);
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

struct ZeroInit {};
struct SphereInit {
  double radius = 1.0;
};
struct ExplicitInit {
  PrimalDualPoint z0;
};
using InitRule = std::variant<ZeroInit, SphereInit, ExplicitInit>;

inline constexpr double kDivergenceBound = 1e12;

struct SolverConfig {
  Algorithm algorithm = Algorithm::Pdhg;
  /// Empty means the automatic rule (see resolve_stepsize).
  std::optional<double> stepsize;
  long max_iters = 1'000'000;
  double kkt_tol = 1e-10;
  /// Every iteration is recorded up to dense_prefix; afterwards every
  /// trace_every-th. The final iterate is always recorded.
  long trace_every = 10;
  long dense_prefix = 10'000;
  std::uint64_t seed = 0;
  InitRule init = ZeroInit{};
  /// Tolerance for the active-set snapshots stored with each trace row.
  double snapshot_eps = 1e-10;
  /// Permits PDHG stepsizes with eta * ||A||_op >= 1.
  bool allow_unsafe_stepsize = false;
};

/// The shared automatic stepsize: 0.99 / ||A||_op for LP and QP, and
/// 1 / (||A||_op + sum_k ||Q^k||_op) for QCQP where A stacks the linear
/// parts c^k and k = 0 is the objective.
double auto_stepsize(const ProblemSpec& p);
double resolve_stepsize(const ProblemSpec& p, const SolverConfig& cfg);

/// Smoothness bound used for the extragradient guarantee: ||Q||_op + ||A||_op.
double egm_smoothness(const ProblemSpec& p);

/// Norm in which the algorithm is nonexpansive: PDHG's P, ADMM's
/// semidefinite P, and the identity for EGM.
PSeminorm algorithm_seminorm(const ProblemSpec& p, Algorithm algo, double eta);

/// gamma in ||z^{k+1} - z^k||_P <= gamma ||z^0 - z*||_P / sqrt(k):
/// 1 for PDHG and ADMM, 3 / sqrt(1 - (eta L)^2) for EGM (infinity if eta L >= 1).
double sublinear_gamma(const ProblemSpec& p, Algorithm algo, double eta);

struct StepResult {
  PrimalDualPoint next;
  PrimalDualPoint aux;
  /// Primal point at which G was evaluated for the dual update, so that
  /// next.y == proj(y + eta * G(dual_anchor)).
  Vector dual_anchor;
};

StepResult pdhg_step(const ProblemSpec& p, const PrimalDualPoint& z, double eta);
StepResult admm_step(const ProblemSpec& p, const PrimalDualPoint& z, double eta);
StepResult egm_step(const ProblemSpec& p, const PrimalDualPoint& z, double eta);

/// Stateful stepper that caches the linear systems used by the primal
/// updates (I + eta Q for PDHG, Q + eta A^T A for ADMM).
class Stepper {
 public:
  Stepper(const ProblemSpec& p, Algorithm algo, double eta);
  StepResult step(const PrimalDualPoint& z) const;
  Algorithm algorithm() const { return algo_; }
  double eta() const { return eta_; }

 private:
  const ProblemSpec* p_;
  Algorithm algo_;
  double eta_;
  std::optional<SpdSystem> system_;
};

/// Per constraint flags recorded at a trace row.
namespace snapshot {
inline constexpr std::uint8_t kDualPositive = 1;   // y_j > eps
inline constexpr std::uint8_t kDualSmall = 2;      // |y_j| < eps
inline constexpr std::uint8_t kPrimalSlack = 4;    // g_j(x) < -eps
inline constexpr std::uint8_t kDualNegative = 8;   // y_j < 0
inline constexpr std::uint8_t kDualExactZero = 16; // y_j == 0.0
}  // namespace snapshot

struct ActiveSnapshot {
  std::vector<std::uint8_t> flags;

  static ActiveSnapshot capture(const Vector& g, const Vector& y, double eps);
  int num_dual_positive() const;
  /// Count of j with g_j(x) >= -eps.
  int num_primal_tight() const;
  std::string encode() const;
  static ActiveSnapshot decode(const std::string& text);
};

struct TraceRow {
  long iter = 0;
  double kkt = 0.0;
  double step_norm_P = 0.0;
  double aux_gap_P = 0.0;
  double dist2_ref = 0.0;
  double distP_ref = 0.0;
  ActiveSnapshot snapshot;
};

enum class Termination { Converged, IterationLimit };

struct IterationTrace {
  Algorithm algorithm = Algorithm::Pdhg;
  double stepsize = 0.0;
  double snapshot_eps = 0.0;
  std::vector<TraceRow> rows;
  PrimalDualPoint initial;
  PrimalDualPoint final_point;
  long iterations = 0;
  double final_kkt = 0.0;
  Termination status = Termination::IterationLimit;
  double wall_seconds = 0.0;
};

/// Everything one step exposes to an observer: z^k, the step result and
/// the iteration index k.
struct StepEvent {
  long k;
  const PrimalDualPoint& current;
  const StepResult& result;
};

using StepObserver = std::function<void(const StepEvent&)>;

/// Iterates until kkt_residual <= kkt_tol or max_iters. Distances in the
/// trace are measured to the final iterate. Throws DivergenceError when
/// ||z^k|| exceeds 1e12 and UnsupportedAlgorithm for PDHG/ADMM on QCQP.
IterationTrace run(const ProblemSpec& p, const SolverConfig& cfg,
                   const StepObserver& observer = {});

PrimalDualPoint initial_point(const ProblemSpec& p, const SolverConfig& cfg);

}  // namespace saddlekit
