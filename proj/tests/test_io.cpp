#include "saddlekit/identification.hpp"
#include "saddlekit/instances.hpp"
#include "saddlekit/problem_io.hpp"
#include "saddlekit/report.hpp"
#include "saddlekit/trace_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

using namespace saddlekit;

namespace {

std::string tmp_path(const std::string& name) {
  const std::filesystem::path dir = SADDLEKIT_TEST_TMPDIR;
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

RandomOptions unchecked() {
  RandomOptions o;
  o.verify = false;
  return o;
}

IterationTrace short_run(const InstanceDescriptor& inst, Algorithm algo) {
  return run(inst.spec, inst.recommended.at(algo));
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("numbers survive a text round trip") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    double v;
    const std::uint64_t b = bits(rng);
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    KvDocument doc("h");
    doc.add("v", v);
    CHECK(KvDocument::parse(doc.serialize(), "h").at("v").as_number() == v);
  }
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("key-value documents") {
  const std::string text =
      "my-header v1\n"
      "# leading comment\n"
      "a: 1.5\n"
      "b: word   # trailing\n"
      "c: [1, [2, 3], x]\n";
  const KvDocument doc = KvDocument::parse(text, "my-header v1");
  CHECK(doc.at("a").as_number() == 1.5);
  CHECK(doc.at("b").as_word() == "word");
  CHECK(doc.at("c").as_list().size() == 3);
  CHECK(doc.at("c").as_list()[1].as_list()[1].as_number() == 3.0);
  CHECK(doc.keys() == std::vector<std::string>{"a", "b", "c"});

  CHECK_THROWS_AS(KvDocument::parse(text, "other v1"), ParseError);
  try {
    KvDocument::parse("h\na: 1\na: 2\n", "h");
    FAIL("expected a duplicate-key error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(KvDocument::parse("h\na: [1, 2\n", "h"), ParseError);
  CHECK_THROWS_AS(doc.at("missing"), ParseError);
}

TEST_CASE("problem files round trip exactly") {
  for (const auto& inst : {intro_qp(), rotated_house(0.6), random_lp(1, 4, 5, 0.6, unchecked()),
                           random_qp(2, 4, 5, 2, unchecked()), random_qcqp(3, 3, 2, unchecked())}) {
    const std::string text = format_problem(inst.spec);
    const ProblemSpec back = parse_problem(text);
    CHECK(format_problem(back) == text);
    CHECK((back.c().array() == inst.spec.c().array()).all());
    CHECK((back.Q().array() == inst.spec.Q().array()).all());
    CHECK((back.linear_part().array() == inst.spec.linear_part().array()).all());
    CHECK((back.rhs().array() == inst.spec.rhs().array()).all());
  }
  const std::string path = tmp_path("house.problem");
  save_problem(rotated_house(0.6).spec, path);
  CHECK(format_problem(load_problem(path)) == format_problem(rotated_house(0.6).spec));
}

TEST_CASE("malformed problem files") {
  const std::string base =
      "saddlekit-problem v1\n"
      "n: 2\n"
      "m: 1\n"
      "objective.c: [1, 0]\n"
      "constraints[0].kind: affine\n"
      "constraints[0].a: [1, 1]\n"
      "constraints[0].b: 1\n";
  CHECK_NOTHROW(parse_problem(base));

  // An extra constraint beyond m.
  CHECK_THROWS_AS(parse_problem(base +
                                "constraints[1].kind: affine\n"
                                "constraints[1].a: [1, 0]\n"
                                "constraints[1].b: 0\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_problem(base + "objective.Q: [[1, 0, 1.0]]\n"), ParseError);
  CHECK_THROWS_AS(parse_problem(base + "objective.Q: [[0, 0, 1.0], [0, 0, 2.0]]\n"), ParseError);
  CHECK_THROWS_AS(parse_problem(base + "objective.Q: [[0, 2, 1.0]]\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("saddlekit-problem v1\nn: 2\nm: 0\nobjective.c: [1, 0, 3]\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_problem("saddlekit-problem v1\nn: 2\nm: 1\nobjective.c: [1, 0]\n"),
                  ParseError);
  // A parsed but non-convex objective is rejected by validation.
  CHECK_THROWS_AS(parse_problem(base + "objective.Q: [[0, 0, -1.0]]\n"), ValidationError);
}

TEST_CASE("trace CSV layout and round trip") {
  const auto inst = intro_qp();
  const IterationTrace t = short_run(inst, Algorithm::Pdhg);
  const std::string csv = format_trace_csv(t);
  const auto lines = split_lines(csv);
  REQUIRE(lines.size() == t.rows.size() + 1);
  CHECK(lines[0] == kTraceCsvHeader);
  CHECK(lines[0] ==
        "iter,kkt,step_norm_P,aux_gap_P,dist2_ref,distP_ref,num_dual_pos,num_primal_tight");
  for (std::size_t i = 1; i < lines.size(); ++i)
    CHECK(std::count(lines[i].begin(), lines[i].end(), ',') == 7);

  const auto rows = parse_trace_csv(csv);
  REQUIRE(rows.size() == t.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].iter == t.rows[i].iter);
    CHECK(rows[i].kkt == t.rows[i].kkt);
    CHECK(rows[i].step_norm_P == t.rows[i].step_norm_P);
    CHECK(rows[i].aux_gap_P == t.rows[i].aux_gap_P);
    CHECK(rows[i].dist2_ref == t.rows[i].dist2_ref);
    CHECK(rows[i].distP_ref == t.rows[i].distP_ref);
  }
  CHECK_THROWS_AS(parse_trace_csv("iter,kkt\n0,1\n"), ParseError);
}

TEST_CASE("summary and active sidecars") {
  const auto inst = intro_qp();
  const SolverConfig cfg = inst.recommended.at(Algorithm::Admm);
  const IterationTrace t = run(inst.spec, cfg);
  const TraceSummary s = make_summary(t, "builtin:intro-qp", cfg, inst.spec);
  const TraceSummary back = parse_summary(format_summary(s));
  CHECK(back.instance == s.instance);
  CHECK(back.algorithm == Algorithm::Admm);
  CHECK(back.stepsize == s.stepsize);
  CHECK(back.iterations == t.iterations);
  CHECK(back.status == Termination::Converged);
  CHECK(back.snapshot_eps == t.snapshot_eps);
  CHECK(back.rows == static_cast<long>(t.rows.size()));
  CHECK((back.final_point.y.array() == t.final_point.y.array()).all());

  const auto active = parse_active(format_active(t));
  REQUIRE(active.size() == t.rows.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    CHECK(active[i].first == t.rows[i].iter);
    CHECK(active[i].second.flags == t.rows[i].snapshot.flags);
  }

  const std::string csv = tmp_path("admm.csv");
  write_trace_files(csv, t, s);
  CHECK(sidecar_path(csv, ".summary") == tmp_path("admm.summary"));
  const LoadedTrace loaded = load_trace_files(csv);
  CHECK(loaded.trace.rows.size() == t.rows.size());
  const ActiveSetPartition part = classify(inst.spec, t.final_point, inst.default_eps);
  CHECK(identification_iteration(loaded.trace, part) == identification_iteration(t, part));

  // A sidecar that disagrees with the CSV is rejected.
  write_text_file(sidecar_path(csv, ".active"), std::string(kActiveHeader) + "\n0 0000\n");
  CHECK_THROWS(load_trace_files(csv));
}

TEST_CASE("analysis and moduli reports parse back") {
  const auto inst = intro_qp();
  const IterationTrace t = short_run(inst, Algorithm::Pdhg);
  AnalysisReport r;
  r.instance = "builtin:intro-qp";
  r.algorithm = t.algorithm;
  r.stepsize = t.stepsize;
  r.iterations = t.iterations;
  r.final_kkt = t.final_kkt;
  r.partition = classify(inst.spec, t.final_point, inst.default_eps);
  r.k_star = identification_iteration(t, r.partition);
  r.fit = fit_two_stage(t, *r.k_star);
  r.radius_error = "degenerate";
  r.alpha = 0.5;
  r.gamma = 1.0;
  r.lambda_max = 2.0;
  r.predicted = predicted_bound(1.0, 2.0, 0.5);
  const KvDocument doc = parse_report(format_analysis_report(r));
  CHECK(doc.at("kind").as_word() == "analysis");
  CHECK(doc.at("degenerate").as_bool());
  CHECK(doc.at("B_d").as_list().size() == 1);
  CHECK(doc.at("B_d").as_list()[0].as_integer() == 2);
  CHECK(doc.at("N").as_list()[0].as_integer() == 1);
  CHECK(doc.at("k_star").as_integer() == *r.k_star);
  CHECK(doc.at("fit.post_rate").as_number() == r.fit->post_rate);
  CHECK(doc.at("predicted.rho").as_number() == 44.0);

  const auto house = rotated_house(0.6);
  ModuliReport mr;
  mr.instance = "builtin:rotated-house";
  mr.seed = 3;
  mr.samples = 1000;
  mr.partition = classify(house.spec, house.known_solution->representative, 1e-8);
  mr.estimate = estimate_moduli(house.spec, *house.known_solution, mr.partition,
                                PSeminorm::scaled_identity(1.0, 2, 3), 2.0, 1000, 3);
  mr.distance_oracle = "closed-form";
  const KvDocument md = parse_report(format_moduli_report(mr));
  CHECK(md.at("kind").as_word() == "moduli");
  CHECK(md.at("alpha_G.estimate").as_number() == *mr.estimate.alpha_G.estimate);
  CHECK(md.at("alpha_M.samples").as_integer() == mr.estimate.alpha_M.num_samples);
  CHECK(md.at("alpha_M.attempts").as_integer() == mr.estimate.alpha_M.num_attempts);
  CHECK(md.at("ordering_consistent").as_bool());
}
