#include "saddlekit/identification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace saddlekit {

ActiveSetPartition classify(const ProblemSpec& p, const PrimalDualPoint& z_star, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("classify: eps must be positive");
  const Vector g = eval_G(p, z_star.x);
  ActiveSetPartition out;
  out.eps = eps;
  for (int j = 0; j < p.num_constraints(); ++j) {
    const double y = z_star.y[j];
    const bool small = std::abs(y) < eps;
    if (y > eps) {
      out.active.push_back(j);
    } else if (small && g[j] < -eps) {
      out.nonactive.push_back(j);
    } else if (small && std::abs(g[j]) < eps) {
      out.degenerate.push_back(j);
    } else {
      out.unclassified.push_back(j);
    }
  }
  return out;
}

bool membership_M(const ProblemSpec& p, const ActiveSetPartition& partition,
                  const PrimalDualPoint& z, double eps) {
  if ((z.y.array() < 0.0).any()) return false;
  const Vector g = eval_G(p, z.x);
  for (int j : partition.nonactive) {
    if (!(g[j] < -eps)) return false;
    const bool zero_ok = eps > 0.0 ? std::abs(z.y[j]) < eps : z.y[j] == 0.0;
    if (!zero_ok) return false;
  }
  for (int j : partition.active) {
    if (!(z.y[j] > eps)) return false;
  }
  return true;
}

bool membership_M(const ActiveSetPartition& partition, const ActiveSnapshot& snapshot) {
  for (auto f : snapshot.flags) {
    if (f & snapshot::kDualNegative) return false;
  }
  for (int j : partition.nonactive) {
    const auto f = snapshot.flags.at(static_cast<std::size_t>(j));
    if (!(f & snapshot::kPrimalSlack) || !(f & snapshot::kDualSmall)) return false;
  }
  for (int j : partition.active) {
    if (!(snapshot.flags.at(static_cast<std::size_t>(j)) & snapshot::kDualPositive)) return false;
  }
  return true;
}

std::optional<long> identification_iteration(const IterationTrace& trace,
                                             const ActiveSetPartition& partition) {
  if (trace.rows.empty()) return std::nullopt;
  if (trace.snapshot_eps != partition.eps) {
    std::ostringstream os;
    os.precision(17);
    os << "trace snapshots were taken at eps " << trace.snapshot_eps
       << " but the partition uses eps " << partition.eps;
    throw std::invalid_argument(os.str());
  }
  std::optional<long> k_star;
  for (auto it = trace.rows.rbegin(); it != trace.rows.rend(); ++it) {
    if (!membership_M(partition, it->snapshot)) break;
    k_star = it->iter;
  }
  return k_star;
}

// ---------------------------------------------------------------------------

StabilityMap::StabilityMap(const ProblemSpec& p, const PrimalDualPoint& z_star,
                           const ActiveSetPartition& partition, const PSeminorm& P)
    : m_(p.num_constraints()) {
  const EigenExtremes ext = eigen_extremes(P);
  if (!(ext.min_positive > 0.0))
    throw PreconditionError("stability radius needs a P with a positive eigenvalue");
  sqrt_lambda_ = std::sqrt(ext.min_positive);

  const Vector g = eval_G(p, z_star.x);
  const Matrix J = jacobian_G(p, z_star.x);
  for (int j : partition.nonactive) {
    if (!(g[j] < 0.0)) {
      std::ostringstream os;
      os << "nonactive constraint " << j << " has no slack margin (g_j(x*) = " << g[j] << ")";
      throw PreconditionError(os.str());
    }
    const Matrix* Qj = p.constraint_hessian(j);
    primal_.push_back({j, -g[j], J.row(j).norm(), Qj ? op_norm(*Qj) : 0.0});
  }
  for (int j : partition.active) {
    if (!(z_star.y[j] > 0.0)) {
      std::ostringstream os;
      os << "active constraint " << j << " has no multiplier margin (y*_j = " << z_star.y[j]
         << ")";
      throw PreconditionError(os.str());
    }
    dual_.push_back({j, z_star.y[j]});
  }
}

double StabilityMap::primal_modulus(int j, double t) const {
  for (const auto& term : primal_) {
    if (term.index == j)
      return (term.gradient + term.curvature * t / sqrt_lambda_) / sqrt_lambda_;
  }
  throw std::invalid_argument("primal_modulus: index not in N");
}

std::pair<int, BindingBranch> StabilityMap::binding(double t) const {
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, BindingBranch> arg{-1, BindingBranch::None};
  for (const auto& term : primal_) {
    const double L = (term.gradient + term.curvature * t / sqrt_lambda_) / sqrt_lambda_;
    if (L <= 0.0) continue;
    const double v = term.slack / L;
    if (v < best) {
      best = v;
      arg = {term.index, BindingBranch::Primal};
    }
  }
  for (const auto& term : dual_) {
    const double v = term.value * sqrt_lambda_;
    if (v < best) {
      best = v;
      arg = {term.index, BindingBranch::Dual};
    }
  }
  return arg;
}

double StabilityMap::operator()(double t) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& term : primal_) {
    const double L = (term.gradient + term.curvature * t / sqrt_lambda_) / sqrt_lambda_;
    if (L > 0.0) best = std::min(best, term.slack / L);
  }
  for (const auto& term : dual_) best = std::min(best, term.value * sqrt_lambda_);
  return best;
}

StabilityRadius stability_radius(const ProblemSpec& p, const PrimalDualPoint& z_star,
                                 const ActiveSetPartition& partition, const PSeminorm& P) {
  const StabilityMap delta_map(p, z_star, partition, P);
  StabilityRadius out;
  out.lambda_min_plus = delta_map.lambda_min_plus();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.primal_moduli.assign(static_cast<std::size_t>(p.num_constraints()), nan);
  out.dual_moduli.assign(static_cast<std::size_t>(p.num_constraints()), nan);

  const double upper = delta_map(0.0);
  if (std::isinf(upper)) {
    out.unbounded = true;
    out.delta = std::numeric_limits<double>::infinity();
    return out;
  }

  bool curved = false;
  for (int j : partition.nonactive) curved = curved || p.constraint_hessian(j) != nullptr;

  double delta = upper;
  if (curved) {
    // t - Delta(t) is increasing, negative near 0 and >= 0 at Delta(0).
    double lo = 0.0;
    double hi = upper;
    for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (mid - delta_map(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    delta = std::abs(lo - delta_map(lo)) < std::abs(hi - delta_map(hi)) ? lo : hi;
  }
  out.delta = delta;
  const auto [index, branch] = delta_map.binding(delta);
  out.binding_index = index;
  out.binding_branch = branch;
  for (int j : partition.nonactive)
    out.primal_moduli[static_cast<std::size_t>(j)] = delta_map.primal_modulus(j, delta);
  for (int j : partition.active)
    out.dual_moduli[static_cast<std::size_t>(j)] = delta_map.dual_modulus();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Vector uniform_in_ball(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector u(dim);
  double nrm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) u[i] = normal(rng);
    nrm = u.norm();
  } while (nrm == 0.0);
  const double radius = std::pow(unit(rng), 1.0 / static_cast<double>(dim));
  return u * (radius / nrm);
}

struct RatioAccumulator {
  ModulusEstimate& target;
  void add(double ratio) {
    ++target.num_samples;
    if (!target.estimate || ratio < *target.estimate) target.estimate = ratio;
  }
};

std::string describe_region(const std::string& base, double tau, double radius) {
  std::ostringstream os;
  os.precision(17);
  os << base << " (tau = " << tau;
  if (radius > 0.0) os << ", P-ball radius delta/2 = " << radius;
  os << ")";
  return os.str();
}

}  // namespace

ModuliEstimate estimate_moduli(const ProblemSpec& p, const KnownSolution& oracle,
                               const ActiveSetPartition& partition, const PSeminorm& P,
                               double tau, long num_samples, std::uint64_t seed) {
  if (!(tau >= 0.0)) throw std::invalid_argument("estimate_moduli: tau must be nonnegative");
  if (num_samples <= 0) throw std::invalid_argument("estimate_moduli: need at least one sample");
  const int n = p.num_vars();
  const int m = p.num_constraints();

  ModuliEstimate out;
  out.tau = tau;
  const StabilityRadius radius = stability_radius(p, oracle.representative, partition, P);
  out.delta = radius.delta;
  const double half_radius = radius.unbounded ? tau : 0.5 * radius.delta;

  out.alpha_G.region = describe_region("S* + tau B", tau, 0.0);
  out.alpha_L.region = describe_region("S* + tau B, distance to reduced solutions", tau, 0.0);
  out.alpha_M.region = describe_region("(S* + tau B) & ball_P(z*, delta/2) & M", tau, half_radius);
  out.alpha_L.disabled = !oracle.has_local();

  RatioAccumulator acc_g{out.alpha_G};
  RatioAccumulator acc_l{out.alpha_L};
  RatioAccumulator acc_m{out.alpha_M};

  auto consider_global = [&](const PrimalDualPoint& z) {
    const double d = oracle.dist(z);
    if (!(d > 0.0) || d > tau) return;
    const double num = saddle_dist(p, z).value;
    acc_g.add(num / d);
    if (!out.alpha_L.disabled) {
      const double dl = oracle.dist_local(z);
      if (dl > 0.0) acc_l.add(num / dl);
    }
  };

  std::mt19937_64 rng(seed);
  for (long s = 0; s < num_samples; ++s) {
    const PrimalDualPoint base = oracle.sample(rng);
    const Vector u = uniform_in_ball(rng, n + m);
    PrimalDualPoint z{base.x + tau * u.head(n), base.y + tau * u.tail(m)};
    ++out.alpha_G.num_attempts;
    ++out.alpha_L.num_attempts;
    consider_global(z);
  }
  if (oracle.witnesses) {
    for (const auto& w : oracle.witnesses(tau)) {
      ++out.alpha_G.num_attempts;
      ++out.alpha_L.num_attempts;
      consider_global(w);
    }
  }

  // alpha_M: coordinates free to move are x and y_j for j not in N.
  std::vector<int> free_coords;
  for (int i = 0; i < n; ++i) free_coords.push_back(i);
  std::vector<bool> in_n(static_cast<std::size_t>(m), false);
  for (int j : partition.nonactive) in_n[static_cast<std::size_t>(j)] = true;
  for (int j = 0; j < m; ++j)
    if (!in_n[static_cast<std::size_t>(j)]) free_coords.push_back(n + j);
  const auto dim = static_cast<Eigen::Index>(free_coords.size());
  const Matrix P_full = P.dense();
  Matrix P_sub(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = 0; b < dim; ++b) P_sub(a, b) = P_full(free_coords[a], free_coords[b]);
  Eigen::LLT<Matrix> chol(P_sub);
  if (chol.info() != Eigen::Success)
    throw PreconditionError("alpha_M sampling needs P positive definite on the subspace y_N = 0");
  const Matrix L = chol.matrixL();

  Vector center = oracle.representative.stacked();
  for (int j : partition.nonactive) center[n + j] = 0.0;
  for (long s = 0; s < num_samples; ++s) {
    ++out.alpha_M.num_attempts;
    const Vector u = uniform_in_ball(rng, dim) * half_radius;
    const Vector step = L.transpose().triangularView<Eigen::Upper>().solve(u);
    Vector z_full = center;
    for (Eigen::Index a = 0; a < dim; ++a) z_full[free_coords[a]] += step[a];
    const PrimalDualPoint z = PrimalDualPoint::from_stacked(z_full, n);
    if (!membership_M(p, partition, z, 0.0)) continue;
    const double d = oracle.dist(z);
    if (!(d > 0.0) || d > tau) continue;
    acc_m.add(saddle_dist(p, z).value / d);
  }

  if (!out.alpha_G.estimate && !out.alpha_L.estimate && !out.alpha_M.estimate)
    throw EmptyEstimateError("no admissible samples: every draw was rejected (is tau > 0?)");
  const double accept_rate = static_cast<double>(out.alpha_M.num_samples) /
                             static_cast<double>(out.alpha_M.num_attempts);
  if (accept_rate < kMinAcceptanceRate && out.alpha_G.estimate) {
    std::ostringstream os;
    os << "alpha_M region too thin: accepted " << out.alpha_M.num_samples << " of "
       << out.alpha_M.num_attempts << " draws";
    throw RegionTooThinError(os.str());
  }

  bool consistent = true;
  if (out.alpha_M.estimate && out.alpha_L.estimate)
    consistent = consistent && *out.alpha_M.estimate >= *out.alpha_L.estimate - kOrderingSlack;
  if (out.alpha_L.estimate && out.alpha_G.estimate)
    consistent = consistent && *out.alpha_L.estimate >= *out.alpha_G.estimate - kOrderingSlack;
  if (out.alpha_M.estimate && out.alpha_G.estimate)
    consistent = consistent && *out.alpha_M.estimate >= *out.alpha_G.estimate - kOrderingSlack;
  out.ordering_consistent = consistent;
  return out;
}

PredictedBound predicted_bound(double gamma, double lambda_max, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("predicted_bound: alpha must be positive");
  PredictedBound b;
  b.nu = gamma * lambda_max / alpha;
  b.rho = std::ceil(std::numbers::e * b.nu * b.nu);
  return b;
}

// ---------------------------------------------------------------------------

namespace {

double slope(const std::vector<double>& k, const std::vector<double>& v) {
  const auto count = static_cast<double>(k.size());
  double mk = 0.0;
  double mv = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    mk += k[i];
    mv += v[i];
  }
  mk /= count;
  mv /= count;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    sxy += (k[i] - mk) * (v[i] - mv);
    sxx += (k[i] - mk) * (k[i] - mk);
  }
  return sxy / sxx;
}

}  // namespace

TwoStageFit fit_two_stage(const IterationTrace& trace, long k_star) {
  std::vector<double> pre_k, pre_v, post_k, post_v;
  const std::size_t usable = trace.rows.empty() ? 0 : trace.rows.size() - 1;
  for (std::size_t i = 0; i < usable; ++i) {
    const auto& row = trace.rows[i];
    const double v = std::log(std::max(row.distP_ref, 1e-300));
    if (row.iter >= k_star) {
      post_k.push_back(static_cast<double>(row.iter));
      post_v.push_back(v);
    } else {
      pre_k.push_back(static_cast<double>(row.iter));
      pre_v.push_back(v);
    }
  }
  if (static_cast<long>(post_k.size()) < kMinPostPoints) {
    std::ostringstream os;
    os << "fit_two_stage: need at least " << kMinPostPoints
       << " recorded points after k* = " << k_star << ", have " << post_k.size();
    throw std::invalid_argument(os.str());
  }
  TwoStageFit fit;
  fit.post_points = static_cast<long>(post_k.size());
  fit.pre_points = static_cast<long>(pre_k.size());
  fit.post_rate = slope(post_k, post_v);
  fit.post_halflife = std::log(2.0) / std::abs(fit.post_rate);
  if (pre_k.size() >= 2) fit.pre_rate = slope(pre_k, pre_v);
  return fit;
}

}  // namespace saddlekit
