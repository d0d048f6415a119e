#pragma once

#include "saddlekit/identification.hpp"
#include "saddlekit/kv_format.hpp"

#include <optional>
#include <string>

namespace saddlekit {

inline constexpr const char* kReportHeader = "saddlekit-report v1";

struct AnalysisReport {
  std::string instance;
  Algorithm algorithm = Algorithm::Pdhg;
  double stepsize = 0.0;
  long iterations = 0;
  double final_kkt = 0.0;
  ActiveSetPartition partition;
  std::optional<long> k_star;
  std::optional<StabilityRadius> radius;
  std::string radius_error;
  std::optional<TwoStageFit> fit;
  std::string fit_error;
  /// Predicted bounds from a modulus estimate, when one was supplied.
  std::optional<double> alpha;
  double gamma = 0.0;
  double lambda_max = 0.0;
  std::optional<PredictedBound> predicted;
};

struct ModuliReport {
  std::string instance;
  std::uint64_t seed = 0;
  long samples = 0;
  ModuliEstimate estimate;
  ActiveSetPartition partition;
  std::string distance_oracle;
};

/// Index sets are written 1-based, matching the usual constraint numbering.
std::string format_analysis_report(const AnalysisReport& r);
std::string format_moduli_report(const ModuliReport& r);

KvDocument parse_report(std::string_view text);

}  // namespace saddlekit
