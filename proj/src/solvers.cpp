#include "saddlekit/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace saddlekit {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Pdhg:
      return "pdhg";
    case Algorithm::Admm:
      return "admm";
    case Algorithm::Egm:
      return "egm";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pdhg") return Algorithm::Pdhg;
  if (name == "admm") return Algorithm::Admm;
  if (name == "egm") return Algorithm::Egm;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected pdhg|admm|egm)");
}

namespace {

std::string divergence_message(long iteration, double norm) {
  std::ostringstream os;
  os.precision(6);
  os << "iterates diverged: ||z^k|| = " << norm << " exceeds " << kDivergenceBound
     << " at iteration " << iteration;
  return os.str();
}

// Projection onto the nonnegative orthant; clamped entries are literal +0.0.
Vector proj_nonneg(const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

void require_affine(const ProblemSpec& p, const char* algo) {
  if (!p.affine_constraints())
    throw UnsupportedAlgorithm(std::string(algo) +
                               " requires affine constraints; use egm for QCQP");
}

void require_positive(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("stepsize must be a positive finite number");
}

double sum_curvature_norms(const ProblemSpec& p) {
  double total = p.has_quadratic_objective() ? op_norm(p.Q()) : 0.0;
  for (int j = 0; j < p.num_constraints(); ++j) {
    if (const Matrix* Qj = p.constraint_hessian(j)) total += op_norm(*Qj);
  }
  return total;
}

}  // namespace

DivergenceError::DivergenceError(long iteration, double norm)
    : std::runtime_error(divergence_message(iteration, norm)), iteration_(iteration) {}

double auto_stepsize(const ProblemSpec& p) {
  const double a_norm = op_norm(p.linear_part());
  if (p.problem_class() == ProblemClass::QCQP) return 1.0 / (a_norm + sum_curvature_norms(p));
  return 0.99 / a_norm;
}

double resolve_stepsize(const ProblemSpec& p, const SolverConfig& cfg) {
  const double eta = cfg.stepsize ? *cfg.stepsize : auto_stepsize(p);
  require_positive(eta);
  if (cfg.algorithm == Algorithm::Pdhg && cfg.stepsize && !cfg.allow_unsafe_stepsize) {
    const double limit = 1.0 / op_norm(p.linear_part());
    if (!(eta < limit)) {
      std::ostringstream os;
      os.precision(17);
      os << "pdhg stepsize " << eta << " violates eta * ||A||_op < 1 (bound " << limit << ")";
      throw std::invalid_argument(os.str());
    }
  }
  return eta;
}

double egm_smoothness(const ProblemSpec& p) {
  return op_norm(p.linear_part()) + sum_curvature_norms(p);
}

PSeminorm algorithm_seminorm(const ProblemSpec& p, Algorithm algo, double eta) {
  switch (algo) {
    case Algorithm::Pdhg:
      return PSeminorm::pdhg(eta, p.linear_part());
    case Algorithm::Admm:
      return PSeminorm::admm(eta, p.linear_part());
    case Algorithm::Egm:
      return PSeminorm::scaled_identity(1.0, p.num_vars(), p.num_constraints());
  }
  throw std::logic_error("unreachable");
}

double sublinear_gamma(const ProblemSpec& p, Algorithm algo, double eta) {
  if (algo != Algorithm::Egm) return 1.0;
  const double eta_l = eta * egm_smoothness(p);
  if (eta_l >= 1.0) return std::numeric_limits<double>::infinity();
  return 3.0 / std::sqrt(1.0 - eta_l * eta_l);
}

// ---------------------------------------------------------------------------

namespace {

StepResult pdhg_update(const ProblemSpec& p, const PrimalDualPoint& z, double eta,
                       const SpdSystem* system) {
  const Matrix& A = p.linear_part();
  const Vector r = z.x - eta * (A.transpose() * z.y + p.c());
  Vector x_next;
  if (!p.has_quadratic_objective()) {
    x_next = r;
  } else if (system) {
    x_next = system->solve(r);
  } else {
    const Matrix M = Matrix::Identity(p.num_vars(), p.num_vars()) + eta * p.Q();
    x_next = solve_spd(M, r);
  }
  Vector x_bar = 2.0 * x_next - z.x;
  Vector y_next = proj_nonneg(z.y + eta * (A * x_bar - p.rhs()));
  StepResult out;
  out.next = {x_next, y_next};
  out.aux = {x_bar, z.y};
  out.dual_anchor = std::move(x_bar);
  return out;
}

Matrix admm_normal_matrix(const ProblemSpec& p, double eta) {
  const Matrix& A = p.linear_part();
  return p.Q() + eta * A.transpose() * A;
}

StepResult admm_update(const ProblemSpec& p, const PrimalDualPoint& z, double eta,
                       const SpdSystem* system) {
  const Matrix& A = p.linear_part();
  const Vector g = A * z.x - p.rhs();
  const Vector u = proj_nonneg(-g - z.y / eta);
  Vector y_next(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const double v = z.y[j] + eta * (g[j] + u[j]);
    y_next[j] = (u[j] > 0.0 || !(v > 0.0)) ? 0.0 : v;
  }
  const Vector rhs = -(p.c() + A.transpose() * y_next) + eta * A.transpose() * (p.rhs() - u);
  Vector x_next = system ? system->solve(rhs) : solve_spd(admm_normal_matrix(p, eta), rhs);
  StepResult out;
  out.next = {std::move(x_next), std::move(y_next)};
  out.aux = out.next;
  out.dual_anchor = z.x;
  return out;
}

}  // namespace

StepResult pdhg_step(const ProblemSpec& p, const PrimalDualPoint& z, double eta) {
  require_affine(p, "pdhg");
  require_positive(eta);
  return pdhg_update(p, z, eta, nullptr);
}

StepResult admm_step(const ProblemSpec& p, const PrimalDualPoint& z, double eta) {
  require_affine(p, "admm");
  require_positive(eta);
  return admm_update(p, z, eta, nullptr);
}

StepResult egm_step(const ProblemSpec& p, const PrimalDualPoint& z, double eta) {
  require_positive(eta);
  const LagrangianGradients at_z = lagrangian_grads(p, z);
  PrimalDualPoint mid{z.x - eta * at_z.gx, proj_nonneg(z.y + eta * at_z.gy)};
  const LagrangianGradients at_mid = lagrangian_grads(p, mid);
  StepResult out;
  out.next = {z.x - eta * at_mid.gx, proj_nonneg(z.y + eta * at_mid.gy)};
  out.dual_anchor = mid.x;
  out.aux = std::move(mid);
  return out;
}

Stepper::Stepper(const ProblemSpec& p, Algorithm algo, double eta)
    : p_(&p), algo_(algo), eta_(eta) {
  require_positive(eta);
  switch (algo) {
    case Algorithm::Pdhg:
      require_affine(p, "pdhg");
      if (p.has_quadratic_objective())
        system_.emplace(Matrix(Matrix::Identity(p.num_vars(), p.num_vars()) + eta * p.Q()));
      break;
    case Algorithm::Admm:
      require_affine(p, "admm");
      system_.emplace(admm_normal_matrix(p, eta));
      break;
    case Algorithm::Egm:
      break;
  }
}

StepResult Stepper::step(const PrimalDualPoint& z) const {
  const SpdSystem* system = system_ ? &*system_ : nullptr;
  switch (algo_) {
    case Algorithm::Pdhg:
      return pdhg_update(*p_, z, eta_, system);
    case Algorithm::Admm:
      return admm_update(*p_, z, eta_, system);
    case Algorithm::Egm:
      return egm_step(*p_, z, eta_);
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------

ActiveSnapshot ActiveSnapshot::capture(const Vector& g, const Vector& y, double eps) {
  ActiveSnapshot s;
  s.flags.resize(static_cast<std::size_t>(y.size()));
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    std::uint8_t f = 0;
    if (y[j] > eps) f |= snapshot::kDualPositive;
    if (std::abs(y[j]) < eps) f |= snapshot::kDualSmall;
    if (g[j] < -eps) f |= snapshot::kPrimalSlack;
    if (y[j] < 0.0) f |= snapshot::kDualNegative;
    if (y[j] == 0.0) f |= snapshot::kDualExactZero;
    s.flags[static_cast<std::size_t>(j)] = f;
  }
  return s;
}

int ActiveSnapshot::num_dual_positive() const {
  int count = 0;
  for (auto f : flags) count += (f & snapshot::kDualPositive) ? 1 : 0;
  return count;
}

int ActiveSnapshot::num_primal_tight() const {
  int count = 0;
  for (auto f : flags) count += (f & snapshot::kPrimalSlack) ? 0 : 1;
  return count;
}

std::string ActiveSnapshot::encode() const {
  static constexpr char kDigits[] = "0123456789abcdefghijklmnopqrstuv";
  std::string out;
  out.reserve(flags.size());
  for (auto f : flags) out.push_back(kDigits[f & 31]);
  return out;
}

ActiveSnapshot ActiveSnapshot::decode(const std::string& text) {
  ActiveSnapshot s;
  s.flags.reserve(text.size());
  for (char ch : text) {
    if (ch >= '0' && ch <= '9') {
      s.flags.push_back(static_cast<std::uint8_t>(ch - '0'));
    } else if (ch >= 'a' && ch <= 'v') {
      s.flags.push_back(static_cast<std::uint8_t>(ch - 'a' + 10));
    } else {
      throw std::invalid_argument(std::string("invalid snapshot character '") + ch + "'");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

PrimalDualPoint initial_point(const ProblemSpec& p, const SolverConfig& cfg) {
  const int n = p.num_vars();
  const int m = p.num_constraints();
  if (const auto* sphere = std::get_if<SphereInit>(&cfg.init)) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(n + m);
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    z *= sphere->radius / z.norm();
    return PrimalDualPoint::from_stacked(z, n);
  }
  if (const auto* given = std::get_if<ExplicitInit>(&cfg.init)) {
    if (given->z0.x.size() != n || given->z0.y.size() != m)
      throw std::invalid_argument("explicit initial point has wrong dimensions");
    return given->z0;
  }
  return {Vector::Zero(n), Vector::Zero(m)};
}

IterationTrace run(const ProblemSpec& p, const SolverConfig& cfg, const StepObserver& observer) {
  if (cfg.max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (cfg.trace_every < 1) throw std::invalid_argument("trace_every must be positive");
  if (!(cfg.kkt_tol >= 0.0)) throw std::invalid_argument("kkt_tol must be nonnegative");
  if (cfg.algorithm != Algorithm::Egm) require_affine(p, to_string(cfg.algorithm).c_str());

  const auto t0 = std::chrono::steady_clock::now();
  const double eta = resolve_stepsize(p, cfg);
  const Stepper stepper(p, cfg.algorithm, eta);
  const PSeminorm P = algorithm_seminorm(p, cfg.algorithm, eta);

  IterationTrace trace;
  trace.algorithm = cfg.algorithm;
  trace.stepsize = eta;
  trace.snapshot_eps = cfg.snapshot_eps;

  PrimalDualPoint z = initial_point(p, cfg);
  PrimalDualPoint aux = z;
  trace.initial = z;

  std::vector<Vector> recorded;  // stacked iterates of recorded rows
  auto diff_norm = [&P](const PrimalDualPoint& a, const PrimalDualPoint& b) {
    return P.eval(a.x - b.x, a.y - b.y);
  };
  auto should_record = [&cfg](long k) {
    return k <= cfg.dense_prefix || k % cfg.trace_every == 0;
  };

  long k = 0;
  bool pending = false;  // last row still needs its step norm
  double kkt = 0.0;
  while (true) {
    kkt = kkt_residual(p, z);
    if (should_record(k)) {
      TraceRow row;
      row.iter = k;
      row.kkt = kkt;
      row.aux_gap_P = diff_norm(z, aux);
      row.snapshot = ActiveSnapshot::capture(eval_G(p, z.x), z.y, cfg.snapshot_eps);
      trace.rows.push_back(std::move(row));
      recorded.push_back(z.stacked());
      pending = true;
    } else {
      pending = false;
    }
    if (kkt <= cfg.kkt_tol) {
      trace.status = Termination::Converged;
      break;
    }
    if (k >= cfg.max_iters) {
      trace.status = Termination::IterationLimit;
      break;
    }
    StepResult res = stepper.step(z);
    if (observer) observer(StepEvent{k, z, res});
    if (pending) trace.rows.back().step_norm_P = diff_norm(res.next, z);
    const double norm = std::sqrt(res.next.x.squaredNorm() + res.next.y.squaredNorm());
    if (!(norm <= kDivergenceBound)) throw DivergenceError(k + 1, norm);
    z = std::move(res.next);
    aux = std::move(res.aux);
    ++k;
  }

  if (!pending) {
    TraceRow row;
    row.iter = k;
    row.kkt = kkt;
    row.aux_gap_P = diff_norm(z, aux);
    row.snapshot = ActiveSnapshot::capture(eval_G(p, z.x), z.y, cfg.snapshot_eps);
    trace.rows.push_back(std::move(row));
    recorded.push_back(z.stacked());
  }
  // The final row's step norm comes from one uncommitted extra step.
  trace.rows.back().step_norm_P = diff_norm(stepper.step(z).next, z);

  const Vector ref = z.stacked();
  const int n = p.num_vars();
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const Vector d = recorded[i] - ref;
    trace.rows[i].dist2_ref = d.norm();
    trace.rows[i].distP_ref = P.eval(Vector(d.head(n)), Vector(d.tail(d.size() - n)));
  }
  trace.final_point = z;
  trace.iterations = k;
  trace.final_kkt = kkt;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

}  // namespace saddlekit
