#include "saddlekit/instances.hpp"

#include "saddlekit/problem_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace saddlekit {

namespace {

std::vector<Constraint> affine_rows(const Matrix& A, const Vector& b) {
  std::vector<Constraint> rows;
  for (Eigen::Index j = 0; j < A.rows(); ++j)
    rows.emplace_back(AffineConstraint{A.row(j).transpose(), b[j]});
  return rows;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

double sum_curvature(const ProblemSpec& p) {
  double s = p.has_quadratic_objective() ? op_norm(p.Q()) : 0.0;
  for (int j = 0; j < p.num_constraints(); ++j)
    if (const Matrix* Qj = p.constraint_hessian(j)) s += op_norm(*Qj);
  return s;
}

}  // namespace

std::vector<Algorithm> applicable_algorithms(const ProblemSpec& p) {
  if (p.affine_constraints()) return {Algorithm::Pdhg, Algorithm::Admm, Algorithm::Egm};
  return {Algorithm::Egm};
}

std::map<Algorithm, SolverConfig> default_configs(const ProblemSpec& p) {
  std::map<Algorithm, SolverConfig> out;
  const double a_norm = op_norm(p.linear_part());
  for (Algorithm algo : applicable_algorithms(p)) {
    SolverConfig cfg;
    cfg.algorithm = algo;
    if (p.affine_constraints()) {
      if (algo == Algorithm::Egm) {
        const double l = sum_curvature(p) + a_norm;
        cfg.stepsize = 0.99 / std::sqrt(l * l + a_norm * a_norm);
      } else {
        cfg.stepsize = 0.99 / a_norm;
      }
    } else {
      cfg.stepsize = auto_stepsize(p);
    }
    out.emplace(algo, cfg);
  }
  return out;
}

// ---------------------------------------------------------------------------

InstanceDescriptor intro_qp() {
  const double theta = std::numbers::pi / 64.0;
  const double zeta = 1.0 / 6.0;
  const double kappa = 0.5;
  const double shift = 1.0 / 1024.0;

  Matrix U(2, 2);
  U << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 1.0;
  Matrix Q = U * D * U.transpose();
  Q = 0.5 * (Q + Q.transpose());

  Matrix A(4, 2);
  A << 1.0, 1.0 / kappa, -1.0, 1.0 / kappa, 0.0, 1.0, -zeta, 1.0;
  const Vector b = vec({1.0, 1.0, kappa - shift, kappa - shift * (1.0 - zeta / kappa)});

  ProblemSpec spec(vec({0.0, -1.0}), Q, affine_rows(A, b));

  // Rows 2, 3, 4 are tight at x*; rows 3 and 4 alone pin it down.
  Matrix A34(2, 2);
  A34 << A.row(2), A.row(3);
  const Vector x_star = A34.partialPivLu().solve(b.tail(2));
  const Vector grad = Q * x_star + spec.c();
  // y_2 = 0 end of the multiplier segment, then the end where y_4 hits 0.
  const Vector y34 = A34.transpose().partialPivLu().solve(-grad);
  Matrix A23(2, 2);
  A23 << A.row(1), A.row(2);
  const Vector y23 = A23.transpose().partialPivLu().solve(-grad);
  Vector y_first = vec({0.0, 0.0, y34[0], y34[1]});
  Vector y_second = vec({0.0, y23[0], y23[1], 0.0});

  KnownSolution sol;
  sol.x_set = SegmentSet::point(x_star);
  sol.y_set = SegmentSet::segment(y_first, y_second);
  sol.local_x_set = sol.x_set;
  sol.local_y_set = sol.y_set;
  sol.representative = {x_star, y_first};

  InstanceDescriptor d{"intro-qp", std::move(spec), std::move(sol), {}, {}, 1e-8, std::nullopt};
  const double a_norm = op_norm(A);
  const double q_norm = op_norm(Q);
  for (Algorithm algo : applicable_algorithms(d.spec)) {
    SolverConfig cfg;
    cfg.algorithm = algo;
    cfg.kkt_tol = 1e-10;
    cfg.snapshot_eps = d.default_eps;
    switch (algo) {
      case Algorithm::Pdhg: cfg.stepsize = 0.99 / a_norm; break;
      case Algorithm::Admm: cfg.stepsize = 2.0 * 0.99 / a_norm; break;
      case Algorithm::Egm:
        cfg.stepsize = 0.99 / std::sqrt((q_norm + a_norm) * (q_norm + a_norm) + a_norm * a_norm);
        break;
    }
    d.recommended.emplace(algo, cfg);
  }
  d.citations =
      "Degenerate QP with B_d = {2}; published limit y* = (0, 0, 0.863, 0.135) and "
      "(Ax* - b)_1 = -3.906e-3.";
  return d;
}

InstanceDescriptor rotated_house(double c1) {
  if (!(c1 > 0.0 && c1 < 1.0)) {
    std::ostringstream os;
    os << "rotated_house: c1 must lie in (0, 1), got " << c1;
    throw std::invalid_argument(os.str());
  }
  const double c2 = std::sqrt(1.0 - c1 * c1);
  const double l1 = c1 + c2;
  Matrix A(3, 2);
  A << -c1, -c2, -1.0, 0.0, 0.0, -1.0;
  const Vector b = vec({-l1, 0.0, 0.0});
  const Vector c = vec({c1, c2});
  ProblemSpec spec(c, std::nullopt, affine_rows(A, b));

  const Vector end_a = vec({l1 / c1, 0.0});
  const Vector end_b = vec({0.0, l1 / c2});
  const Vector y_star = vec({1.0, 0.0, 0.0});
  const Vector x_mid = 0.5 * (end_a + end_b);

  KnownSolution sol;
  sol.x_set = SegmentSet::segment(end_a, end_b);
  sol.y_set = SegmentSet::point(y_star);
  sol.local_x_set = SegmentSet::full_line(end_a, end_b);
  sol.local_y_set = SegmentSet::point(y_star);
  sol.representative = {x_mid, y_star};
  sol.witnesses = [=](double tau) {
    std::vector<PrimalDualPoint> w;
    if (!(tau > 0.0)) return w;
    const double eps = std::min(0.1, 0.5 * tau);
    // Just past either endpoint along its axis.
    w.push_back({vec({0.0, l1 / c2 + eps}), y_star});
    w.push_back({vec({l1 / c1 + eps, 0.0}), y_star});
    w.push_back({x_mid + (tau - eps) * c, Vector::Zero(3)});
    return w;
  };

  InstanceDescriptor d{"rotated-house", std::move(spec), std::move(sol), {}, {}, 1e-10,
                       std::nullopt};
  d.recommended = default_configs(d.spec);
  for (auto& [algo, cfg] : d.recommended) cfg.snapshot_eps = d.default_eps;
  d.citations = "Example LP with alpha_M = 1 and alpha_G <= min(c1, c2).";
  return d;
}

InstanceDescriptor trivial_lp() {
  Matrix A(1, 1);
  A << -1.0;
  ProblemSpec spec(vec({1.0}), std::nullopt, affine_rows(A, vec({0.0})));
  KnownSolution sol;
  sol.x_set = SegmentSet::point(vec({0.0}));
  sol.y_set = SegmentSet::point(vec({1.0}));
  sol.local_x_set = sol.x_set;
  sol.local_y_set = sol.y_set;
  sol.representative = {vec({0.0}), vec({1.0})};
  InstanceDescriptor d{"trivial-lp", std::move(spec), std::move(sol), {}, {}, 1e-10,
                       std::nullopt};
  d.recommended = default_configs(d.spec);
  for (auto& [algo, cfg] : d.recommended) cfg.snapshot_eps = d.default_eps;
  d.citations = "min x s.t. x >= 0.";
  return d;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kPostCheckTol = 1e-6;
constexpr long kPostCheckIters = 100'000;

bool solvable(const InstanceDescriptor& d) {
  for (const auto& [algo, base] : d.recommended) {
    SolverConfig cfg = base;
    cfg.max_iters = kPostCheckIters;
    cfg.kkt_tol = kPostCheckTol;
    cfg.dense_prefix = 0;
    cfg.trace_every = kPostCheckIters;
    try {
      const IterationTrace t = run(d.spec, cfg);
      if (t.status != Termination::Converged) return false;
    } catch (const DivergenceError&) {
      return false;
    }
  }
  return true;
}

void require_dims(int n, int m) {
  if (n < 1 || m < 1) throw std::invalid_argument("random instances need n >= 1 and m >= 1");
}

Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = normal(rng);
  return M;
}

Vector margins(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Vector v(m);
  for (int j = 0; j < m; ++j) v[j] = unif(rng);
  return v;
}

// Nonnegative weights with at least one positive entry.
Vector cone_weights(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector w(m);
  for (int j = 0; j < m; ++j) w[j] = unif(rng) < 0.5 ? unif(rng) : 0.0;
  if (w.maxCoeff() <= 0.0) w[static_cast<int>(unif(rng) * m) % m] = 1.0;
  return w;
}

template <typename Build>
InstanceDescriptor generate(const char* kind, std::uint64_t seed, const RandomOptions& options,
                            Build&& build) {
  for (int attempt = 0; attempt < std::max(1, options.max_attempts); ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    InstanceDescriptor d = build(rng);
    d.recommended = default_configs(d.spec);
    for (auto& [algo, cfg] : d.recommended) cfg.snapshot_eps = d.default_eps;
    if (!options.verify || solvable(d)) return d;
  }
  std::ostringstream os;
  os << kind << " generator: no solvable instance for seed " << seed << " after "
     << options.max_attempts << " attempts";
  throw GeneratorError(os.str());
}

std::string random_name(const char* kind, std::uint64_t seed, int n, int m) {
  std::ostringstream os;
  os << kind << "-s" << seed << "-n" << n << "-m" << m;
  return os.str();
}

}  // namespace

InstanceDescriptor random_lp(std::uint64_t seed, int n, int m, double density,
                             const RandomOptions& options) {
  require_dims(n, m);
  if (!(density > 0.0 && density <= 1.0))
    throw std::invalid_argument("random_lp: density must lie in (0, 1]");
  return generate("random_lp", seed, options, [&](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix A = gaussian(rng, m, n);
    for (int i = 0; i < m; ++i) {
      const int keep = static_cast<int>(unif(rng) * n) % n;
      for (int k = 0; k < n; ++k)
        if (k != keep && unif(rng) >= density) A(i, k) = 0.0;
    }
    const Vector x0 = gaussian(rng, n, 1).col(0);
    const Vector b = A * x0 + margins(rng, m);
    const Vector c = -A.transpose() * cone_weights(rng, m);
    InstanceDescriptor d{random_name("random-lp", seed, n, m),
                         ProblemSpec(c, std::nullopt, affine_rows(A, b)),
                         std::nullopt, {}, "random LP", 1e-10, x0};
    return d;
  });
}

InstanceDescriptor random_qp(std::uint64_t seed, int n, int m, int rank,
                             const RandomOptions& options) {
  require_dims(n, m);
  if (rank < 0 || rank > n) throw std::invalid_argument("random_qp: rank must lie in [0, n]");
  return generate("random_qp", seed, options, [&](std::mt19937_64& rng) {
    const Matrix A = gaussian(rng, m, n);
    const Vector x0 = gaussian(rng, n, 1).col(0);
    const Vector b = A * x0 + margins(rng, m);
    Matrix Q = Matrix::Zero(n, n);
    if (rank > 0) {
      const Matrix B = gaussian(rng, n, rank) / std::sqrt(static_cast<double>(n));
      Q = B * B.transpose();
    }
    const Vector v = gaussian(rng, n, 1).col(0);
    const Vector c = Q * v - A.transpose() * cone_weights(rng, m);
    InstanceDescriptor d{random_name("random-qp", seed, n, m),
                         ProblemSpec(c, Q, affine_rows(A, b)),
                         std::nullopt, {}, "random QP", 1e-10, x0};
    return d;
  });
}

InstanceDescriptor random_qcqp(std::uint64_t seed, int n, int m, const RandomOptions& options) {
  require_dims(n, m);
  return generate("random_qcqp", seed, options, [&](std::mt19937_64& rng) {
    const Vector x0 = 0.5 * gaussian(rng, n, 1).col(0);
    const Vector marg = margins(rng, m);
    std::vector<Constraint> rows;
    for (int j = 0; j < m; ++j) {
      const Matrix B = gaussian(rng, n, 2) / std::sqrt(static_cast<double>(n));
      const Matrix Qj = B * B.transpose();
      const Vector cj = gaussian(rng, n, 1).col(0);
      const double bj = cj.dot(x0) + 0.5 * x0.dot(Qj * x0) + marg[j];
      rows.emplace_back(QuadraticConstraint{cj, Qj, bj});
    }
    const Matrix B = gaussian(rng, n, n) / std::sqrt(static_cast<double>(n));
    const Matrix Q = 0.5 * Matrix::Identity(n, n) + 0.5 * B * B.transpose();
    const Vector c = gaussian(rng, n, 1).col(0);
    InstanceDescriptor d{random_name("random-qcqp", seed, n, m),
                         ProblemSpec(c, Q, std::move(rows)),
                         std::nullopt, {}, "random QCQP", 1e-10, x0};
    return d;
  });
}

// ---------------------------------------------------------------------------

std::vector<std::string> builtin_names() { return {"intro-qp", "rotated-house", "trivial-lp"}; }

InstanceDescriptor resolve_instance(const std::string& ref, double c1) {
  constexpr std::string_view prefix = "builtin:";
  if (ref.starts_with(prefix)) {
    const std::string name = ref.substr(prefix.size());
    if (name == "intro-qp") return intro_qp();
    if (name == "rotated-house") return rotated_house(c1);
    if (name == "trivial-lp") return trivial_lp();
    throw std::invalid_argument("unknown builtin instance '" + name + "'");
  }
  ProblemSpec spec = load_problem(ref);
  InstanceDescriptor d{ref, std::move(spec), std::nullopt, {}, "loaded from " + ref, 1e-10,
                       std::nullopt};
  d.recommended = default_configs(d.spec);
  for (auto& [algo, cfg] : d.recommended) cfg.snapshot_eps = d.default_eps;
  return d;
}

}  // namespace saddlekit
