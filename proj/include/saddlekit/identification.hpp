#pragma once

#include "saddlekit/linalg.hpp"
#include "saddlekit/problem.hpp"
#include "saddlekit/solution_set.hpp"
#include "saddlekit/solvers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace saddlekit {

/// Index sets at a limit point z* (0-based indices):
///   nonactive   N:   g_j(x*) < -eps and |y*_j| < eps
///   active      B_a: y*_j > eps
///   degenerate  B_d: |g_j(x*)| < eps and |y*_j| < eps
/// Anything else lands in `unclassified`.
struct ActiveSetPartition {
  std::vector<int> nonactive;
  std::vector<int> active;
  std::vector<int> degenerate;
  std::vector<int> unclassified;
  double eps = 0.0;

  bool is_degenerate() const { return !degenerate.empty(); }
};

ActiveSetPartition classify(const ProblemSpec& p, const PrimalDualPoint& z_star, double eps);

/// Membership in the eps-approximate identifiable set:
/// g_j(x) < -eps and |y_j| < eps on N, y_j > eps on B_a, and y >= 0.
/// With eps == 0 the exact set is used (y_N == 0).
bool membership_M(const ProblemSpec& p, const ActiveSetPartition& partition,
                  const PrimalDualPoint& z, double eps);

/// Same predicate evaluated on a recorded snapshot (taken at the
/// partition's eps).
bool membership_M(const ActiveSetPartition& partition, const ActiveSnapshot& snapshot);

/// Smallest recorded iteration k such that every recorded iterate from k on
/// is in M^eps; empty when the final recorded iterate is not. Resolution is
/// the trace cadence. Throws std::invalid_argument when the trace snapshots
/// were taken at a different eps than the partition's.
std::optional<long> identification_iteration(const IterationTrace& trace,
                                              const ActiveSetPartition& partition);

enum class BindingBranch { None, Primal, Dual };

struct StabilityRadius {
  double delta = 0.0;
  bool unbounded = false;
  int binding_index = -1;
  BindingBranch binding_branch = BindingBranch::None;
  /// L^x_{delta j} for j in N and L^y_{delta j} for j in B_a, indexed by
  /// constraint; NaN elsewhere.
  std::vector<double> primal_moduli;
  std::vector<double> dual_moduli;
  double lambda_min_plus = 0.0;
};

/// The modulus map Delta(t) = min{ -g_j(x*) / L^x_j(t) (j in N),
/// y*_j / L^y_j(t) (j in B_a) }, with
///   L^x_j(t) = (||grad g_j(x*)|| + ||Q_j||_op t / sqrt(l)) / sqrt(l),
///   L^y_j(t) = 1 / sqrt(l),   l = lambda_min^+(P).
/// For affine constraints L^x_j is constant.
class StabilityMap {
 public:
  StabilityMap(const ProblemSpec& p, const PrimalDualPoint& z_star,
               const ActiveSetPartition& partition, const PSeminorm& P);

  double operator()(double t) const;
  double primal_modulus(int j, double t) const;
  double dual_modulus() const { return 1.0 / sqrt_lambda_; }
  double lambda_min_plus() const { return sqrt_lambda_ * sqrt_lambda_; }
  /// Argmin of the map at t: (index, branch).
  std::pair<int, BindingBranch> binding(double t) const;

 private:
  struct PrimalTerm {
    int index;
    double slack;     // -g_j(x*)
    double gradient;  // ||grad g_j(x*)||
    double curvature; // ||Q_j||_op
  };
  struct DualTerm {
    int index;
    double value;     // y*_j
  };
  std::vector<PrimalTerm> primal_;
  std::vector<DualTerm> dual_;
  double sqrt_lambda_;
  int m_;
};

/// Fixed point of the modulus map (bisection on t - Delta(t)).
/// Throws PreconditionError when some j in N has g_j(x*) >= 0 or some j in
/// B_a has y*_j <= 0.
StabilityRadius stability_radius(const ProblemSpec& p, const PrimalDualPoint& z_star,
                                 const ActiveSetPartition& partition, const PSeminorm& P);

class EmptyEstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegionTooThinError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModulusEstimate {
  /// Minimum sampled ratio, empty when no admissible sample was drawn.
  std::optional<double> estimate;
  long num_samples = 0;   // admissible samples that entered the minimum
  long num_attempts = 0;  // draws including rejections
  std::string region;
  bool disabled = false;
};

struct ModuliEstimate {
  ModulusEstimate alpha_G;
  ModulusEstimate alpha_L;
  ModulusEstimate alpha_M;
  double tau = 0.0;
  double delta = 0.0;
  bool ordering_consistent = false;
};

inline constexpr double kOrderingSlack = 1e-6;
inline constexpr double kMinAcceptanceRate = 1e-3;

/// Sampled upper bounds on the global, local and identifiable-set metric
/// subregularity moduli.
///
/// alpha_G and alpha_L share draws z = s + tau u with s uniform on S* and u
/// uniform in the unit ball; alpha_L divides by the distance to the reduced
/// solution set instead (disabled when the oracle has none). The oracle's
/// witness points are added when they lie in the region. alpha_M draws
/// uniformly from the P-ball of radius delta/2 around the oracle's
/// representative point inside the subspace y_N = 0 and keeps draws in
/// (S* + tau B) and M.
ModuliEstimate estimate_moduli(const ProblemSpec& p, const KnownSolution& oracle,
                               const ActiveSetPartition& partition, const PSeminorm& P,
                               double tau, long num_samples, std::uint64_t seed);

struct PredictedBound {
  double nu = 0.0;
  double rho = 0.0;
};

/// nu = gamma lambda_max(P) / alpha and rho = ceil(e nu^2).
PredictedBound predicted_bound(double gamma, double lambda_max, double alpha);

struct TwoStageFit {
  std::optional<double> pre_rate;
  double post_rate = 0.0;
  double post_halflife = 0.0;
  long pre_points = 0;
  long post_points = 0;
};

inline constexpr long kMinPostPoints = 20;

/// Least-squares slopes of log(distP_ref) against k before and after
/// k_star. The final row (distance zero by construction) is excluded and
/// remaining zeros are clamped to 1e-300.
TwoStageFit fit_two_stage(const IterationTrace& trace, long k_star);

}  // namespace saddlekit
