#include "saddlekit/cli.hpp"

#include "saddlekit/identification.hpp"
#include "saddlekit/instances.hpp"
#include "saddlekit/kv_format.hpp"
#include "saddlekit/report.hpp"
#include "saddlekit/trace_io.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

namespace saddlekit {

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> log;
  std::call_once(once, [] {
    log = spdlog::stderr_logger_mt("saddlekit");
    log->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("SADDLEKIT_LOG")) level = spdlog::level::from_str(env);
    log->set_level(level);
  });
  return log;
}

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw CliError(what + ": '" + text + "' is not a number");
  return v;
}

InitRule parse_init(const std::string& spec, const ProblemSpec& p) {
  if (spec == "zero") return ZeroInit{};
  if (spec.starts_with("sphere:")) {
    const double r = parse_real(spec.substr(7), "--init sphere radius");
    if (!(r > 0.0)) throw CliError("--init sphere radius must be positive");
    return SphereInit{r};
  }
  if (spec.starts_with("file:")) {
    const KvDocument doc = KvDocument::parse(read_text_file(spec.substr(5)), "saddlekit-point v1");
    PrimalDualPoint z{doc.at("x").as_vector(), doc.at("y").as_vector()};
    if (z.x.size() != p.num_vars() || z.y.size() != p.num_constraints())
      throw CliError("--init file: point dimensions do not match the instance");
    return ExplicitInit{z};
  }
  throw CliError("--init must be zero, sphere:R or file:PATH");
}

struct SolveOptions {
  std::string instance;
  std::string algo;
  std::string stepsize = "recommended";
  long max_iters = -1;
  double kkt_tol = -1.0;
  std::string init = "zero";
  std::uint64_t seed = 0;
  std::string out;
  double c1 = 0.6;
  double snapshot_eps = -1.0;
  long trace_every = 10;
  long dense_prefix = 10'000;
  bool allow_unsafe = false;
};

int cmd_solve(const SolveOptions& o, std::ostream& out) {
  const InstanceDescriptor inst = resolve_instance(o.instance, o.c1);
  const Algorithm algo = parse_algorithm(o.algo);
  const auto rec = inst.recommended.find(algo);
  if (rec == inst.recommended.end())
    throw UnsupportedAlgorithm(to_string(algo) + " does not apply to " +
                               to_string(inst.spec.problem_class()) + " instance " + inst.name);
  SolverConfig cfg = rec->second;
  if (o.stepsize == "auto") {
    cfg.stepsize.reset();
  } else if (o.stepsize != "recommended") {
    cfg.stepsize = parse_real(o.stepsize, "--stepsize");
  }
  if (o.max_iters >= 0) cfg.max_iters = o.max_iters;
  if (o.kkt_tol >= 0.0) cfg.kkt_tol = o.kkt_tol;
  cfg.snapshot_eps = o.snapshot_eps > 0.0 ? o.snapshot_eps : inst.default_eps;
  cfg.seed = o.seed;
  cfg.init = parse_init(o.init, inst.spec);
  cfg.trace_every = o.trace_every;
  cfg.dense_prefix = o.dense_prefix;
  cfg.allow_unsafe_stepsize = o.allow_unsafe;

  logger()->info("solving {} with {}", inst.name, to_string(algo));
  const IterationTrace trace = run(inst.spec, cfg);
  logger()->info("{} iterations in {:.3f} s", trace.iterations, trace.wall_seconds);

  if (!o.out.empty()) {
    write_trace_files(o.out, trace, make_summary(trace, o.instance, cfg, inst.spec));
  }
  out << to_string(algo) << " on " << inst.name << ": " << to_string(trace.status) << " after "
      << trace.iterations << " iterations, kkt " << format_number(trace.final_kkt) << '\n';
  return trace.status == Termination::Converged ? kExitConverged : kExitIterationLimit;
}

struct AnalyzeOptions {
  std::string trace;
  std::string instance;
  double eps = -1.0;
  std::string out;
  double c1 = 0.6;
  double alpha = -1.0;
  std::string moduli_report;
};

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out) {
  const LoadedTrace loaded = load_trace_files(o.trace);
  const InstanceDescriptor inst = resolve_instance(o.instance, o.c1);
  const auto& s = loaded.summary;
  if (s.n != inst.spec.num_vars() || s.m != inst.spec.num_constraints()) {
    std::ostringstream os;
    os << "trace was produced on a problem with n = " << s.n << ", m = " << s.m << " but "
       << inst.name << " has n = " << inst.spec.num_vars() << ", m = " << inst.spec.num_constraints();
    throw CliError(os.str());
  }
  if (s.instance != o.instance)
    logger()->warn("trace instance '{}' differs from '{}'", s.instance, o.instance);
  const double eps = o.eps > 0.0 ? o.eps : s.snapshot_eps;
  if (eps != s.snapshot_eps) {
    throw CliError("--eps " + format_number(eps) + " differs from the trace snapshot eps " +
                   format_number(s.snapshot_eps) + "; re-run solve with --snapshot-eps");
  }

  AnalysisReport r;
  r.instance = o.instance;
  r.algorithm = s.algorithm;
  r.stepsize = s.stepsize;
  r.iterations = s.iterations;
  r.final_kkt = s.final_kkt;
  r.partition = classify(inst.spec, s.final_point, eps);
  r.k_star = identification_iteration(loaded.trace, r.partition);
  const PSeminorm P = algorithm_seminorm(inst.spec, s.algorithm, s.stepsize);
  try {
    r.radius = stability_radius(inst.spec, s.final_point, r.partition, P);
  } catch (const std::exception& e) {
    r.radius_error = e.what();
  }
  if (r.k_star) {
    try {
      r.fit = fit_two_stage(loaded.trace, *r.k_star);
    } catch (const std::exception& e) {
      r.fit_error = e.what();
    }
  } else {
    r.fit_error = "the final iterate is not in the identifiable set";
  }

  std::optional<double> alpha;
  if (o.alpha > 0.0) alpha = o.alpha;
  if (!o.moduli_report.empty()) {
    const KvDocument rep = parse_report(read_text_file(o.moduli_report));
    const KvValue& v = rep.at("alpha_M.estimate");
    if (v.kind != KvValue::Kind::Number) throw CliError("moduli report has no alpha_M estimate");
    alpha = v.number;
  }
  if (alpha) {
    r.alpha = alpha;
    r.gamma = sublinear_gamma(inst.spec, s.algorithm, s.stepsize);
    r.lambda_max = eigen_extremes(P).max;
    r.predicted = predicted_bound(r.gamma, r.lambda_max, *alpha);
  }

  const std::string text = format_analysis_report(r);
  if (o.out.empty()) {
    out << text;
  } else {
    write_text_file(o.out, text);
  }
  return kExitConverged;
}

struct ModuliOptions {
  std::string instance;
  double c1 = 0.6;
  double tau = 2.0;
  long samples = 100'000;
  std::uint64_t seed = 0;
  std::string out;
  double eps = -1.0;
  long aux_iters = 0;
};

int cmd_moduli(const ModuliOptions& o, std::ostream& out) {
  if (o.samples <= 0) throw CliError("--samples must be positive");
  const InstanceDescriptor inst = resolve_instance(o.instance, o.c1);
  KnownSolution oracle;
  std::string oracle_kind = "exact";
  if (inst.known_solution) {
    oracle = *inst.known_solution;
  } else {
    if (o.aux_iters <= 0)
      throw CliError(inst.name +
                     " has no known solution set; pass --aux-iters N to approximate it by a "
                     "tighter auxiliary solve (alpha_L is then disabled)");
    SolverConfig cfg = inst.recommended.begin()->second;
    cfg.kkt_tol = 1e-11;
    cfg.max_iters = o.aux_iters;
    cfg.dense_prefix = 0;
    cfg.trace_every = o.aux_iters + 1;
    const IterationTrace t = run(inst.spec, cfg);
    if (t.status != Termination::Converged)
      logger()->warn("auxiliary solve stopped at kkt {}", t.final_kkt);
    oracle.x_set = SegmentSet::point(t.final_point.x);
    oracle.y_set = SegmentSet::point(t.final_point.y);
    oracle.representative = t.final_point;
    oracle_kind = "auxiliary-solve";
  }
  const double eps = o.eps > 0.0 ? o.eps : inst.default_eps;
  const ActiveSetPartition part = classify(inst.spec, oracle.representative, eps);
  const PSeminorm P =
      PSeminorm::scaled_identity(1.0, inst.spec.num_vars(), inst.spec.num_constraints());
  ModuliReport r;
  r.instance = o.instance;
  r.seed = o.seed;
  r.samples = o.samples;
  r.partition = part;
  r.distance_oracle = oracle_kind;
  r.estimate = estimate_moduli(inst.spec, oracle, part, P, o.tau, o.samples, o.seed);
  const std::string text = format_moduli_report(r);
  if (o.out.empty()) {
    out << text;
  } else {
    write_text_file(o.out, text);
  }
  return kExitConverged;
}

int cmd_builtin_list(std::ostream& out) {
  for (const auto& name : builtin_names()) {
    const InstanceDescriptor d = resolve_instance("builtin:" + name);
    out << "builtin:" << name << "  " << to_string(d.spec.problem_class()) << " n="
        << d.spec.num_vars() << " m=" << d.spec.num_constraints() << "  " << d.citations << '\n';
  }
  return kExitConverged;
}

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> words;
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

int cmd_batch(const std::string& job_file, int jobs, std::ostream& out, std::ostream& err) {
  if (jobs < 1) throw CliError("--jobs must be at least 1");
  std::vector<std::vector<std::string>> commands;
  {
    std::istringstream is(read_text_file(job_file));
    std::string line;
    while (std::getline(is, line)) {
      auto words = split_words(line);
      if (words.empty() || words.front().starts_with("#")) continue;
      if (words.front() == "batch") throw CliError("batch jobs cannot nest batch");
      commands.push_back(std::move(words));
    }
  }
  std::vector<int> codes(commands.size(), kExitError);
  std::vector<std::string> outs(commands.size()), errs(commands.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < commands.size(); i = next++) {
      std::ostringstream o, e;
      codes[i] = run_cli(commands[i], o, e);
      outs[i] = o.str();
      errs[i] = e.str();
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(1, commands.size())));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  int status = kExitConverged;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    out << outs[i];
    err << errs[i];
    if (codes[i] == kExitError) {
      status = kExitError;
    } else if (codes[i] == kExitIterationLimit && status == kExitConverged) {
      status = kExitIterationLimit;
    }
  }
  return status;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Primal-dual first-order solvers with active-set identification diagnostics",
               "saddlekit"};
  app.require_subcommand(1);

  SolveOptions solve_opt;
  auto* solve = app.add_subcommand("solve", "Run PDHG, ADMM or EGM and write a trace");
  solve->add_option("--instance", solve_opt.instance, "Problem file or builtin:<name>")->required();
  solve->add_option("--algo", solve_opt.algo, "pdhg, admm or egm")->required();
  solve->add_option("--stepsize", solve_opt.stepsize, "Real value, auto or recommended");
  solve->add_option("--max-iters", solve_opt.max_iters, "Iteration limit");
  solve->add_option("--kkt-tol", solve_opt.kkt_tol, "KKT residual tolerance");
  solve->add_option("--init", solve_opt.init, "zero, sphere:R or file:PATH");
  solve->add_option("--seed", solve_opt.seed, "Seed for sphere initialization");
  solve->add_option("--out", solve_opt.out, "Trace CSV path (writes .summary and .active too)");
  solve->add_option("--c1", solve_opt.c1, "First cost component for builtin:rotated-house");
  solve->add_option("--snapshot-eps", solve_opt.snapshot_eps, "Tolerance of active-set snapshots");
  solve->add_option("--trace-every", solve_opt.trace_every, "Recording cadence after the dense prefix");
  solve->add_option("--dense-prefix", solve_opt.dense_prefix, "Iterations recorded one by one");
  solve->add_flag("--allow-unsafe-stepsize", solve_opt.allow_unsafe,
                  "Accept PDHG stepsizes with eta ||A|| >= 1");

  AnalyzeOptions an_opt;
  auto* analyze = app.add_subcommand("analyze", "Identification analysis of a trace");
  analyze->add_option("--trace", an_opt.trace, "Trace CSV written by solve")->required();
  analyze->add_option("--instance", an_opt.instance, "Problem file or builtin:<name>")->required();
  analyze->add_option("--eps", an_opt.eps, "Partition tolerance (must match the snapshots)");
  analyze->add_option("--out", an_opt.out, "Report path (stdout when omitted)");
  analyze->add_option("--c1", an_opt.c1, "First cost component for builtin:rotated-house");
  analyze->add_option("--alpha", an_opt.alpha, "Modulus used for predicted bounds");
  analyze->add_option("--moduli-report", an_opt.moduli_report,
                      "Take the modulus for predicted bounds from a moduli report");

  ModuliOptions mod_opt;
  auto* moduli = app.add_subcommand("moduli", "Sample metric subregularity moduli");
  moduli->add_option("--instance", mod_opt.instance, "Problem file or builtin:<name>")->required();
  moduli->add_option("--c1", mod_opt.c1, "First cost component for builtin:rotated-house");
  moduli->add_option("--tau", mod_opt.tau, "Radius of the region around the solution set");
  moduli->add_option("--samples", mod_opt.samples, "Draws per modulus");
  moduli->add_option("--seed", mod_opt.seed, "Sampling seed");
  moduli->add_option("--out", mod_opt.out, "Report path (stdout when omitted)");
  moduli->add_option("--eps", mod_opt.eps, "Partition tolerance");
  moduli->add_option("--aux-iters", mod_opt.aux_iters,
                     "Iteration budget of the auxiliary solve for instances without a known "
                     "solution set");

  auto* list = app.add_subcommand("builtin-list", "List built-in instances");

  std::string job_file;
  int jobs = 1;
  auto* batch = app.add_subcommand("batch", "Run the commands of a job file in parallel");
  batch->add_option("jobfile", job_file, "One saddlekit command per line")->required();
  batch->add_option("--jobs", jobs, "Worker threads");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitConverged;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitError;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_opt, out);
    if (analyze->parsed()) return cmd_analyze(an_opt, out);
    if (moduli->parsed()) return cmd_moduli(mod_opt, out);
    if (list->parsed()) return cmd_builtin_list(out);
    if (batch->parsed()) return cmd_batch(job_file, jobs, out, err);
  } catch (const std::exception& e) {
    logger()->debug("command failed: {}", e.what());
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace saddlekit
