#include "saddlekit/report.hpp"

#include <sstream>

namespace saddlekit {

namespace {

std::string to_string(BindingBranch b) {
  switch (b) {
    case BindingBranch::Primal: return "primal";
    case BindingBranch::Dual: return "dual";
    case BindingBranch::None: break;
  }
  return "none";
}

void add_partition(KvDocument& doc, const ActiveSetPartition& part) {
  doc.add("eps", part.eps);
  doc.add("N", KvValue::of_indices(part.nonactive, 1));
  doc.add("B_a", KvValue::of_indices(part.active, 1));
  doc.add("B_d", KvValue::of_indices(part.degenerate, 1));
  doc.add("unclassified", KvValue::of_indices(part.unclassified, 1));
  doc.add_word("degenerate", part.is_degenerate() ? "true" : "false");
}

void add_estimate(KvDocument& doc, const std::string& name, const ModulusEstimate& e) {
  if (e.disabled) {
    doc.add_word(name + ".estimate", "disabled");
  } else if (e.estimate) {
    doc.add(name + ".estimate", *e.estimate);
  } else {
    doc.add_word(name + ".estimate", "none");
  }
  doc.add(name + ".samples", static_cast<double>(e.num_samples));
  doc.add(name + ".attempts", static_cast<double>(e.num_attempts));
  doc.comment(name + " region: " + e.region);
}

}  // namespace

std::string format_analysis_report(const AnalysisReport& r) {
  KvDocument doc(kReportHeader);
  doc.comment("identification analysis of a solver trace");
  doc.add_word("kind", "analysis");
  doc.add_word("instance", r.instance);
  doc.add_word("algorithm", saddlekit::to_string(r.algorithm));
  doc.add("stepsize", r.stepsize);
  doc.add("iterations", static_cast<double>(r.iterations));
  doc.add("final_kkt", r.final_kkt);
  add_partition(doc, r.partition);
  if (r.k_star) {
    doc.add("k_star", static_cast<double>(*r.k_star));
  } else {
    doc.add_word("k_star", "none");
  }
  doc.comment("k_star is resolved at the trace recording cadence");

  if (r.radius) {
    const auto& rad = *r.radius;
    doc.add("delta", rad.delta);
    doc.add("delta.binding_index", static_cast<double>(rad.binding_index + 1));
    doc.add_word("delta.binding_branch", to_string(rad.binding_branch));
    doc.add("lambda_min_plus", rad.lambda_min_plus);
  } else {
    doc.add_word("delta", "none");
    if (!r.radius_error.empty()) doc.comment("delta unavailable: " + r.radius_error);
  }

  if (r.fit) {
    if (r.fit->pre_rate) {
      doc.add("fit.pre_rate", *r.fit->pre_rate);
    } else {
      doc.add_word("fit.pre_rate", "none");
    }
    doc.add("fit.post_rate", r.fit->post_rate);
    doc.add("fit.post_halflife", r.fit->post_halflife);
    doc.add("fit.pre_points", static_cast<double>(r.fit->pre_points));
    doc.add("fit.post_points", static_cast<double>(r.fit->post_points));
  } else {
    doc.add_word("fit", "none");
    if (!r.fit_error.empty()) doc.comment("rates unavailable: " + r.fit_error);
  }

  if (r.predicted && r.alpha) {
    doc.comment("predicted bounds use a sampled modulus, an upper bound on the true one,");
    doc.comment("so they are optimistic");
    doc.add("predicted.alpha", *r.alpha);
    doc.add("predicted.gamma", r.gamma);
    doc.add("predicted.lambda_max", r.lambda_max);
    doc.add("predicted.nu", r.predicted->nu);
    doc.add("predicted.rho", r.predicted->rho);
  }
  return doc.serialize();
}

std::string format_moduli_report(const ModuliReport& r) {
  KvDocument doc(kReportHeader);
  doc.comment("sampled metric subregularity moduli (minimum ratios, upper bounds)");
  doc.add_word("kind", "moduli");
  doc.add_word("instance", r.instance);
  doc.add("seed", static_cast<double>(r.seed));
  doc.add("samples", static_cast<double>(r.samples));
  doc.add("tau", r.estimate.tau);
  doc.add("delta", r.estimate.delta);
  doc.add_word("distance_oracle", r.distance_oracle);
  add_partition(doc, r.partition);
  add_estimate(doc, "alpha_G", r.estimate.alpha_G);
  add_estimate(doc, "alpha_L", r.estimate.alpha_L);
  add_estimate(doc, "alpha_M", r.estimate.alpha_M);
  doc.add_word("ordering_consistent", r.estimate.ordering_consistent ? "true" : "false");
  return doc.serialize();
}

KvDocument parse_report(std::string_view text) { return KvDocument::parse(text, kReportHeader); }

}  // namespace saddlekit
