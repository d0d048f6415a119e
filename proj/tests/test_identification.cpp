#include "oracles.hpp"

#include "saddlekit/identification.hpp"
#include "saddlekit/instances.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace saddlekit;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

RandomOptions unchecked() {
  RandomOptions o;
  o.verify = false;
  return o;
}

// Two constraints: j = 0 should end up nonactive, j = 1 active.
ActiveSetPartition two_constraint_partition(double eps) {
  ActiveSetPartition part;
  part.nonactive = {0};
  part.active = {1};
  part.eps = eps;
  return part;
}

TraceRow row_at(long iter, bool inside, double eps) {
  TraceRow r;
  r.iter = iter;
  const Vector g = vec({-1.0, 0.0});
  const Vector y = inside ? vec({0.0, 1.0}) : vec({0.5, 1.0});
  r.snapshot = ActiveSnapshot::capture(g, y, eps);
  return r;
}

IterationTrace synthetic_trace(const std::vector<std::pair<long, bool>>& rows, double eps) {
  IterationTrace t;
  t.snapshot_eps = eps;
  for (const auto& [k, in] : rows) t.rows.push_back(row_at(k, in, eps));
  return t;
}

Vector uniform_ball(std::mt19937_64& rng, int dim, double radius) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector u = oracle::gaussian_vector(rng, dim);
  u.normalize();
  return radius * std::pow(unif(rng), 1.0 / dim) * u;
}

}  // namespace

TEST_CASE("classify the intro-qp solution") {
  const auto inst = intro_qp();
  const ActiveSetPartition part = classify(inst.spec, inst.known_solution->representative, 1e-8);
  CHECK(part.nonactive == std::vector<int>{0});
  CHECK(part.degenerate == std::vector<int>{1});
  CHECK(part.active == std::vector<int>{2, 3});
  CHECK(part.unclassified.empty());
  CHECK(part.is_degenerate());
  CHECK_THROWS_AS(classify(inst.spec, inst.known_solution->representative, 0.0),
                  std::invalid_argument);
}

TEST_CASE("classify the rotated house and trivial LP") {
  const auto house = rotated_house(0.6);
  const ActiveSetPartition hp = classify(house.spec, house.known_solution->representative, 1e-8);
  CHECK(hp.active == std::vector<int>{0});
  CHECK(hp.nonactive == std::vector<int>{1, 2});
  CHECK(!hp.is_degenerate());

  const auto lp = trivial_lp();
  const ActiveSetPartition lpp = classify(lp.spec, lp.known_solution->representative, 1e-8);
  CHECK(lpp.active == std::vector<int>{0});
  CHECK(lpp.nonactive.empty());
}

TEST_CASE("membership in the identifiable set") {
  const auto inst = intro_qp();
  const PrimalDualPoint z = inst.known_solution->representative;
  const ActiveSetPartition part = classify(inst.spec, z, 1e-8);
  CHECK(membership_M(inst.spec, part, z, 1e-8));
  CHECK(membership_M(inst.spec, part, z, 0.0));

  PrimalDualPoint small = z;
  small.y[0] = 1e-12;
  CHECK(membership_M(inst.spec, part, small, 1e-8));
  CHECK(!membership_M(inst.spec, part, small, 0.0));

  PrimalDualPoint off = z;
  off.y[0] = 1e-3;
  CHECK(!membership_M(inst.spec, part, off, 1e-8));

  PrimalDualPoint negative = z;
  negative.y[1] = -1e-12;
  CHECK(!membership_M(inst.spec, part, negative, 1e-8));

  // The snapshot form agrees with the point form.
  for (const auto& q : {z, small, off, negative}) {
    const auto snap = ActiveSnapshot::capture(eval_G(inst.spec, q.x), q.y, 1e-8);
    CHECK(membership_M(part, snap) == membership_M(inst.spec, part, q, 1e-8));
  }
}

TEST_CASE("identification iteration on constructed traces") {
  const double eps = 1e-6;
  const auto part = two_constraint_partition(eps);

  SUBCASE("entry, exit and re-entry") {
    std::vector<std::pair<long, bool>> rows;
    for (long k = 0; k <= 20; ++k) rows.emplace_back(k, k == 3 || k == 4 || k >= 7);
    CHECK(identification_iteration(synthetic_trace(rows, eps), part) == 7L);
  }
  SUBCASE("sparse cadence") {
    std::vector<std::pair<long, bool>> rows;
    for (long k = 0; k <= 40; k += 4) rows.emplace_back(k, k >= 12);
    rows.emplace_back(41, true);
    CHECK(identification_iteration(synthetic_trace(rows, eps), part) == 12L);
  }
  SUBCASE("never settles") {
    CHECK(!identification_iteration(synthetic_trace({{0, true}, {1, false}}, eps), part));
  }
  SUBCASE("inside from the start") {
    CHECK(identification_iteration(synthetic_trace({{0, true}, {1, true}}, eps), part) == 0L);
  }
  SUBCASE("eps mismatch") {
    CHECK_THROWS_AS(identification_iteration(synthetic_trace({{0, true}}, 1e-8), part),
                    std::invalid_argument);
  }
}

TEST_CASE("identification on a real intro-qp run") {
  const auto inst = intro_qp();
  const IterationTrace t = run(inst.spec, inst.recommended.at(Algorithm::Admm));
  REQUIRE(t.status == Termination::Converged);
  const ActiveSetPartition part = classify(inst.spec, t.final_point, inst.default_eps);
  const auto k_star = identification_iteration(t, part);
  REQUIRE(k_star.has_value());
  for (const auto& r : t.rows) {
    if (r.iter >= *k_star) {
      CHECK((r.snapshot.flags[0] & snapshot::kDualExactZero) != 0);
    }
  }
}

TEST_CASE("stability radius closed forms") {
  const PSeminorm I2 = PSeminorm::scaled_identity(1.0, 2, 3);
  const auto house = rotated_house(0.6);
  const auto& zh = house.known_solution->representative;
  const StabilityRadius rh = stability_radius(house.spec, zh, classify(house.spec, zh, 1e-8), I2);
  CHECK(rh.delta == doctest::Approx(0.875).epsilon(1e-12));
  CHECK(!rh.unbounded);
  CHECK(rh.lambda_min_plus == doctest::Approx(1.0));
  CHECK(std::isnan(rh.primal_moduli[0]));
  CHECK(rh.dual_moduli[0] == doctest::Approx(1.0));

  const auto lp = trivial_lp();
  const auto& zl = lp.known_solution->representative;
  const StabilityRadius rl = stability_radius(lp.spec, zl, classify(lp.spec, zl, 1e-8),
                                              PSeminorm::scaled_identity(1.0, 1, 1));
  CHECK(rl.delta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rl.binding_index == 0);
  CHECK(rl.binding_branch == BindingBranch::Dual);

  // Scaling P by s scales lambda_min_plus by s and delta by sqrt(s).
  const StabilityRadius scaled = stability_radius(lp.spec, zl, classify(lp.spec, zl, 1e-8),
                                                  PSeminorm::scaled_identity(0.25, 1, 1));
  CHECK(scaled.delta == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("stability radius rejects a zero margin") {
  const auto house = rotated_house(0.6);
  const auto& z = house.known_solution->representative;
  ActiveSetPartition part = classify(house.spec, z, 1e-8);
  // Pretend the binding constraint is nonactive.
  part.nonactive.push_back(part.active.front());
  part.active.clear();
  CHECK_THROWS_AS(stability_radius(house.spec, z, part, PSeminorm::scaled_identity(1.0, 2, 3)),
                  PreconditionError);
}

TEST_CASE("stability radius on random QCQPs is a fixed point and keeps the partition") {
  std::mt19937_64 rng(61);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = random_qcqp(seed, 3, 3, unchecked());
    SolverConfig cfg = inst.recommended.at(Algorithm::Egm);
    cfg.kkt_tol = 1e-12;
    cfg.max_iters = 200000;
    const IterationTrace t = run(inst.spec, cfg);
    if (t.status != Termination::Converged) continue;
    const ActiveSetPartition part = classify(inst.spec, t.final_point, 1e-6);
    if (part.is_degenerate() || !part.unclassified.empty()) continue;
    const PSeminorm P = PSeminorm::scaled_identity(1.0, 3, 3);
    const StabilityRadius r = stability_radius(inst.spec, t.final_point, part, P);
    if (r.unbounded) continue;
    const StabilityMap map(inst.spec, t.final_point, part, P);
    CHECK(std::abs(map(r.delta) - r.delta) <= 1e-9 * r.delta);

    for (int trial = 0; trial < 1000; ++trial) {
      const Vector step = uniform_ball(rng, 6, r.delta * (1.0 - 1e-9));
      const PrimalDualPoint z{t.final_point.x + step.head(3), t.final_point.y + step.tail(3)};
      const Vector g = eval_G(inst.spec, z.x);
      for (int j : part.nonactive) CHECK(g[j] < 0.0);
      for (int j : part.active) CHECK(z.y[j] > 0.0);
    }
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("moduli estimates on the rotated house") {
  const double c1 = 0.6, c2 = 0.8;
  const auto house = rotated_house(c1);
  const auto& oracle_sol = *house.known_solution;
  const ActiveSetPartition part = classify(house.spec, oracle_sol.representative, 1e-8);
  const PSeminorm P = PSeminorm::scaled_identity(1.0, 2, 3);
  const ModuliEstimate est = estimate_moduli(house.spec, oracle_sol, part, P, 2.0, 5000, 7);

  REQUIRE(est.alpha_G.estimate);
  REQUIRE(est.alpha_M.estimate);
  CHECK(*est.alpha_G.estimate <= std::min(c1, c2) + 1e-9);
  CHECK(std::abs(*est.alpha_M.estimate - 1.0) <= 1e-6);
  CHECK(est.ordering_consistent);
  CHECK(est.delta == doctest::Approx(0.875));
  CHECK(est.alpha_G.num_samples <= est.alpha_G.num_attempts);
  CHECK(est.alpha_M.num_samples <= est.alpha_M.num_attempts);

  const ModuliEstimate again = estimate_moduli(house.spec, oracle_sol, part, P, 2.0, 5000, 7);
  CHECK(*again.alpha_G.estimate == *est.alpha_G.estimate);
  CHECK(*again.alpha_M.estimate == *est.alpha_M.estimate);

  CHECK_THROWS_AS(estimate_moduli(house.spec, oracle_sol, part, P, 0.0, 100, 1), EmptyEstimateError);
}

TEST_CASE("predicted bound") {
  const PredictedBound b = predicted_bound(1.0, 2.0, 0.5);
  CHECK(b.nu == 4.0);
  CHECK(b.rho == std::ceil(std::numbers::e * 16.0));
  CHECK(b.rho == 44.0);
}

TEST_CASE("two-stage fit on a synthetic trace") {
  IterationTrace t;
  for (long k = 0; k <= 150; ++k) {
    TraceRow r;
    r.iter = k;
    r.distP_ref = k < 50 ? std::exp(-0.01 * k) : std::exp(-0.5 - 0.1 * (k - 50));
    t.rows.push_back(r);
  }
  t.rows.back().distP_ref = 0.0;
  const TwoStageFit fit = fit_two_stage(t, 50);
  REQUIRE(fit.pre_rate);
  CHECK(*fit.pre_rate == doctest::Approx(-0.01).epsilon(1e-9));
  CHECK(fit.post_rate == doctest::Approx(-0.1).epsilon(1e-9));
  CHECK(fit.post_halflife == doctest::Approx(std::log(2.0) / 0.1).epsilon(1e-9));
  CHECK(fit.pre_points == 50);
  CHECK(fit.post_points == 100);

  CHECK_THROWS_AS(fit_two_stage(t, 140), std::invalid_argument);

  const TwoStageFit no_pre = fit_two_stage(t, 1);
  CHECK(!no_pre.pre_rate);
}
