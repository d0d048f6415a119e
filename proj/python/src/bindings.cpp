#include "saddlekit/cli.hpp"
#include "saddlekit/identification.hpp"
#include "saddlekit/instances.hpp"
#include "saddlekit/problem_io.hpp"
#include "saddlekit/trace_io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace saddlekit;

namespace {

PrimalDualPoint point(const Vector& x, const Vector& y) { return {x, y}; }

SolverConfig make_config(const ProblemSpec& p, const std::string& algo, std::optional<double> stepsize,
                         long max_iters, double kkt_tol, std::optional<double> sphere_radius,
                         std::uint64_t seed, double snapshot_eps, long trace_every,
                         long dense_prefix) {
  SolverConfig cfg;
  cfg.algorithm = parse_algorithm(algo);
  // Without an explicit stepsize the recommended one for the problem class is used.
  cfg.stepsize = stepsize;
  if (!cfg.stepsize) {
    const auto defaults = default_configs(p);
    const auto it = defaults.find(cfg.algorithm);
    if (it != defaults.end()) cfg.stepsize = it->second.stepsize;
  }
  cfg.max_iters = max_iters;
  cfg.kkt_tol = kkt_tol;
  if (sphere_radius) cfg.init = SphereInit{*sphere_radius};
  cfg.seed = seed;
  cfg.snapshot_eps = snapshot_eps;
  cfg.trace_every = trace_every;
  cfg.dense_prefix = dense_prefix;
  return cfg;
}

py::dict trace_columns(const IterationTrace& t) {
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::VectorXd kkt(n), step(n), aux(n), d2(n), dp(n);
  Eigen::Matrix<long, Eigen::Dynamic, 1> iter(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    iter[i] = r.iter;
    kkt[i] = r.kkt;
    step[i] = r.step_norm_P;
    aux[i] = r.aux_gap_P;
    d2[i] = r.dist2_ref;
    dp[i] = r.distP_ref;
  }
  py::dict d;
  d["iter"] = iter;
  d["kkt"] = kkt;
  d["step_norm_P"] = step;
  d["aux_gap_P"] = aux;
  d["dist2_ref"] = d2;
  d["distP_ref"] = dp;
  return d;
}

py::dict estimate_dict(const ModulusEstimate& e) {
  py::dict d;
  d["estimate"] = e.estimate ? py::cast(*e.estimate) : py::none();
  d["samples"] = e.num_samples;
  d["attempts"] = e.num_attempts;
  d["disabled"] = e.disabled;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Primal-dual first-order solvers with active-set identification diagnostics";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
  py::register_exception<UnsupportedAlgorithm>(m, "UnsupportedAlgorithm", PyExc_ValueError);

  py::class_<ProblemSpec>(m, "Problem")
      .def_property_readonly("n", &ProblemSpec::num_vars)
      .def_property_readonly("m", &ProblemSpec::num_constraints)
      .def_property_readonly("problem_class",
                             [](const ProblemSpec& p) { return to_string(p.problem_class()); })
      .def_property_readonly("c", [](const ProblemSpec& p) { return Vector(p.c()); })
      .def_property_readonly("Q", [](const ProblemSpec& p) { return Matrix(p.Q()); })
      .def_property_readonly("A", [](const ProblemSpec& p) { return Matrix(p.linear_part()); })
      .def_property_readonly("b", [](const ProblemSpec& p) { return Vector(p.rhs()); })
      .def("G", [](const ProblemSpec& p, const Vector& x) { return Vector(eval_G(p, x)); })
      .def("objective", &ProblemSpec::objective)
      .def("to_text", [](const ProblemSpec& p) { return format_problem(p); });

  py::class_<InstanceDescriptor>(m, "Instance")
      .def_readonly("name", &InstanceDescriptor::name)
      .def_readonly("problem", &InstanceDescriptor::spec)
      .def_readonly("default_eps", &InstanceDescriptor::default_eps)
      .def_property_readonly("solution",
                             [](const InstanceDescriptor& d) -> py::object {
                               if (!d.known_solution) return py::none();
                               const auto& z = d.known_solution->representative;
                               return py::make_tuple(Vector(z.x), Vector(z.y));
                             })
      .def_property_readonly("recommended_stepsizes", [](const InstanceDescriptor& d) {
        std::map<std::string, double> out;
        for (const auto& [algo, cfg] : d.recommended) out[to_string(algo)] = *cfg.stepsize;
        return out;
      });

  m.def("intro_qp", &intro_qp);
  m.def("rotated_house", &rotated_house, py::arg("c1") = 0.6);
  m.def("trivial_lp", &trivial_lp);
  m.def("builtin_names", &builtin_names);
  m.def("resolve_instance", &resolve_instance, py::arg("ref"), py::arg("c1") = 0.6);
  m.def("random_lp",
        [](std::uint64_t seed, int n, int m, double density, bool verify) {
          RandomOptions o;
          o.verify = verify;
          return random_lp(seed, n, m, density, o);
        },
        py::arg("seed"), py::arg("n"), py::arg("m"), py::arg("density") = 0.5,
        py::arg("verify") = true);
  m.def("random_qp",
        [](std::uint64_t seed, int n, int m, int rank, bool verify) {
          RandomOptions o;
          o.verify = verify;
          return random_qp(seed, n, m, rank, o);
        },
        py::arg("seed"), py::arg("n"), py::arg("m"), py::arg("rank") = 1, py::arg("verify") = true);
  m.def("random_qcqp",
        [](std::uint64_t seed, int n, int m, bool verify) {
          RandomOptions o;
          o.verify = verify;
          return random_qcqp(seed, n, m, o);
        },
        py::arg("seed"), py::arg("n"), py::arg("m"), py::arg("verify") = true);

  m.def("parse_problem", [](const std::string& text) { return parse_problem(text); });
  m.def("load_problem", &load_problem);
  m.def("save_problem", &save_problem);

  m.def("kkt_residual", [](const ProblemSpec& p, const Vector& x, const Vector& y) {
    return kkt_residual(p, point(x, y));
  });
  m.def("saddle_dist", [](const ProblemSpec& p, const Vector& x, const Vector& y) {
    return saddle_dist(p, point(x, y)).value;
  });

  py::class_<IterationTrace>(m, "Trace")
      .def_property_readonly("algorithm", [](const IterationTrace& t) { return to_string(t.algorithm); })
      .def_readonly("stepsize", &IterationTrace::stepsize)
      .def_readonly("iterations", &IterationTrace::iterations)
      .def_readonly("final_kkt", &IterationTrace::final_kkt)
      .def_readonly("snapshot_eps", &IterationTrace::snapshot_eps)
      .def_property_readonly("status", [](const IterationTrace& t) { return to_string(t.status); })
      .def_property_readonly("x", [](const IterationTrace& t) { return Vector(t.final_point.x); })
      .def_property_readonly("y", [](const IterationTrace& t) { return Vector(t.final_point.y); })
      .def("columns", &trace_columns)
      .def("to_csv", [](const IterationTrace& t) { return format_trace_csv(t); });

  m.def("solve",
        [](const ProblemSpec& p, const std::string& algo, std::optional<double> stepsize,
           long max_iters, double kkt_tol, std::optional<double> sphere_radius, std::uint64_t seed,
           double snapshot_eps, long trace_every, long dense_prefix) {
          const SolverConfig cfg = make_config(p, algo, stepsize, max_iters, kkt_tol, sphere_radius,
                                               seed, snapshot_eps, trace_every, dense_prefix);
          py::gil_scoped_release release;
          return run(p, cfg);
        },
        py::arg("problem"), py::arg("algorithm"), py::arg("stepsize") = py::none(),
        py::arg("max_iters") = 1'000'000, py::arg("kkt_tol") = 1e-10,
        py::arg("sphere_radius") = py::none(), py::arg("seed") = 0,
        py::arg("snapshot_eps") = 1e-10, py::arg("trace_every") = 10,
        py::arg("dense_prefix") = 10'000);

  py::class_<ActiveSetPartition>(m, "Partition")
      .def_readonly("nonactive", &ActiveSetPartition::nonactive)
      .def_readonly("active", &ActiveSetPartition::active)
      .def_readonly("degenerate", &ActiveSetPartition::degenerate)
      .def_readonly("unclassified", &ActiveSetPartition::unclassified)
      .def_readonly("eps", &ActiveSetPartition::eps)
      .def_property_readonly("is_degenerate", &ActiveSetPartition::is_degenerate);

  m.def("classify", [](const ProblemSpec& p, const Vector& x, const Vector& y, double eps) {
    return classify(p, point(x, y), eps);
  });
  m.def("identification_iteration", &identification_iteration);
  m.def("fit_two_stage", [](const IterationTrace& t, long k_star) {
    const TwoStageFit f = fit_two_stage(t, k_star);
    py::dict d;
    d["pre_rate"] = f.pre_rate ? py::cast(*f.pre_rate) : py::none();
    d["post_rate"] = f.post_rate;
    d["post_halflife"] = f.post_halflife;
    return d;
  });
  m.def("stability_radius",
        [](const ProblemSpec& p, const Vector& x, const Vector& y, const ActiveSetPartition& part) {
          const StabilityRadius r =
              stability_radius(p, point(x, y), part,
                               PSeminorm::scaled_identity(1.0, p.num_vars(), p.num_constraints()));
          return r.unbounded ? std::numeric_limits<double>::infinity() : r.delta;
        });
  m.def("estimate_moduli",
        [](const InstanceDescriptor& inst, double tau, long samples, std::uint64_t seed) {
          if (!inst.known_solution) throw std::invalid_argument("instance has no known solution");
          const auto& sol = *inst.known_solution;
          const auto part = classify(inst.spec, sol.representative, inst.default_eps);
          const auto P =
              PSeminorm::scaled_identity(1.0, inst.spec.num_vars(), inst.spec.num_constraints());
          const ModuliEstimate e = estimate_moduli(inst.spec, sol, part, P, tau, samples, seed);
          py::dict d;
          d["alpha_G"] = estimate_dict(e.alpha_G);
          d["alpha_L"] = estimate_dict(e.alpha_L);
          d["alpha_M"] = estimate_dict(e.alpha_M);
          d["delta"] = e.delta;
          d["ordering_consistent"] = e.ordering_consistent;
          return d;
        },
        py::arg("instance"), py::arg("tau") = 2.0, py::arg("samples") = 100000,
        py::arg("seed") = 0);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
