#include "saddlekit/instances.hpp"
#include "saddlekit/problem_io.hpp"

#include <doctest.h>

#include <cmath>

using namespace saddlekit;

namespace {

RandomOptions unchecked() {
  RandomOptions o;
  o.verify = false;
  return o;
}

bool same_problem(const ProblemSpec& a, const ProblemSpec& b) {
  return format_problem(a) == format_problem(b);
}

}  // namespace

TEST_CASE("intro-qp data") {
  const auto inst = intro_qp();
  const ProblemSpec& p = inst.spec;
  CHECK(p.num_vars() == 2);
  CHECK(p.num_constraints() == 4);
  CHECK(p.c()[0] == 0.0);
  CHECK(p.c()[1] == -1.0);

  // Q = U diag(1, 0) U^T: rank one, trace one, kernel along the second column of U.
  const double th = std::acos(-1.0) / 64.0;
  Vector kernel(2);
  kernel << -std::sin(th), std::cos(th);
  CHECK(p.Q().trace() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((p.Q() * kernel).norm() <= 1e-15);

  // x* = (-2 d, 1/2 - d) with d = 2^-10.
  const double d = std::ldexp(1.0, -10);
  const Vector& xs = inst.known_solution->representative.x;
  CHECK(xs[0] == doctest::Approx(-2.0 * d).epsilon(1e-15));
  CHECK(xs[1] == doctest::Approx(0.5 - d).epsilon(1e-15));

  const auto& ys = inst.known_solution->y_set;
  CHECK(ys.start[0] == 0.0);
  CHECK(ys.start[1] == 0.0);
  CHECK(ys.end[3] == 0.0);
  CHECK(ys.end[1] == doctest::Approx(ys.start[3] / 6.0).epsilon(1e-14));
  CHECK(ys.end[2] == doctest::Approx(ys.start[2] + 4.0 * ys.start[3] / 6.0).epsilon(1e-14));
  CHECK(inst.default_eps == 1e-8);
  CHECK(inst.recommended.size() == 3);
}

TEST_CASE("rotated house data and witnesses") {
  const double c1 = 0.3;
  const double c2 = std::sqrt(1.0 - c1 * c1);
  const auto house = rotated_house(c1);
  const auto& sol = *house.known_solution;
  CHECK(sol.x_set.start[0] == doctest::Approx((c1 + c2) / c1));
  CHECK(sol.x_set.start[1] == 0.0);
  CHECK(sol.x_set.end[1] == doctest::Approx((c1 + c2) / c2));
  CHECK(sol.local_x_set->line);
  const auto w = sol.witnesses(2.0);
  CHECK(w.size() == 3);
  // Corner points sit eps = 0.1 past the endpoints; the last one is off S* by tau - eps along c.
  CHECK(sol.dist(w[0]) == doctest::Approx(0.1));
  CHECK(sol.dist(w[1]) == doctest::Approx(0.1));
  CHECK(w[2].y.norm() == 0.0);
  CHECK((w[2].x - sol.representative.x).norm() == doctest::Approx(1.9));

  CHECK_THROWS_AS(rotated_house(0.0), std::invalid_argument);
  CHECK_THROWS_AS(rotated_house(1.0), std::invalid_argument);
  CHECK_THROWS_AS(rotated_house(-0.5), std::invalid_argument);
}

TEST_CASE("built-in resolution") {
  CHECK(builtin_names() == std::vector<std::string>{"intro-qp", "rotated-house", "trivial-lp"});
  CHECK(resolve_instance("builtin:intro-qp").name == "intro-qp");
  CHECK(resolve_instance("builtin:rotated-house", 0.3).spec.c()[0] == 0.3);
  CHECK_THROWS(resolve_instance("builtin:nope"));
  CHECK_THROWS(resolve_instance("/nonexistent/problem.txt"));
}

TEST_CASE("random generators are deterministic in the seed") {
  CHECK(same_problem(random_lp(4, 5, 6, 0.5, unchecked()).spec,
                     random_lp(4, 5, 6, 0.5, unchecked()).spec));
  CHECK(!same_problem(random_lp(4, 5, 6, 0.5, unchecked()).spec,
                      random_lp(5, 5, 6, 0.5, unchecked()).spec));
  CHECK(same_problem(random_qp(4, 5, 6, 2, unchecked()).spec,
                     random_qp(4, 5, 6, 2, unchecked()).spec));
  CHECK(same_problem(random_qcqp(4, 3, 2, unchecked()).spec,
                     random_qcqp(4, 3, 2, unchecked()).spec));
}

TEST_CASE("random instances are built around a strictly feasible point") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& inst : {random_lp(seed, 6, 9, 0.4, unchecked()),
                             random_qp(seed, 6, 9, 3, unchecked()),
                             random_qcqp(seed, 4, 3, unchecked())}) {
      REQUIRE(inst.feasible_point);
      const Vector g = eval_G(inst.spec, *inst.feasible_point);
      CHECK(g.maxCoeff() <= -0.1 + 1e-12);
      CHECK(g.minCoeff() >= -1.0 - 1e-12);
    }
  }
}

TEST_CASE("random QP has the requested objective rank") {
  for (int rank = 1; rank <= 4; ++rank) {
    const auto inst = random_qp(11, 6, 5, rank, unchecked());
    Eigen::SelfAdjointEigenSolver<Matrix> es(inst.spec.Q());
    const double top = es.eigenvalues().maxCoeff();
    int count = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] > 1e-10 * top) ++count;
    CHECK(count == rank);
  }
}

TEST_CASE("random LP density and class") {
  const auto lp = random_lp(2, 10, 12, 0.3, unchecked());
  CHECK(lp.spec.problem_class() == ProblemClass::LP);
  const Matrix& A = lp.spec.linear_part();
  const double filled = static_cast<double>((A.array() != 0.0).count()) / static_cast<double>(A.size());
  CHECK(filled > 0.1);
  CHECK(filled < 0.6);
  CHECK(applicable_algorithms(lp.spec).size() == 3);
  CHECK(applicable_algorithms(random_qcqp(1, 2, 2, unchecked()).spec) ==
        std::vector<Algorithm>{Algorithm::Egm});
}

TEST_CASE("verified generation solves with every recommended config") {
  const auto inst = random_qp(3, 4, 5, 2);
  for (const auto& [algo, base] : inst.recommended) {
    SolverConfig cfg = base;
    cfg.kkt_tol = 1e-6;
    cfg.max_iters = 100000;
    CHECK(run(inst.spec, cfg).status == Termination::Converged);
  }
  CHECK_THROWS_AS(random_lp(1, 0, 3, 0.5), std::invalid_argument);
}
