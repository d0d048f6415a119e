#pragma once

#include "saddlekit/kv_format.hpp"
#include "saddlekit/solvers.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace saddlekit {

inline constexpr const char* kTraceCsvHeader =
    "iter,kkt,step_norm_P,aux_gap_P,dist2_ref,distP_ref,num_dual_pos,num_primal_tight";
inline constexpr const char* kSummaryHeader = "saddlekit-summary v1";
inline constexpr const char* kActiveHeader = "saddlekit-active v1";

/// Run metadata stored next to a trace CSV (same stem, ".summary").
struct TraceSummary {
  std::string instance;
  Algorithm algorithm = Algorithm::Pdhg;
  double stepsize = 0.0;
  long iterations = 0;
  Termination status = Termination::IterationLimit;
  double final_kkt = 0.0;
  double kkt_tol = 0.0;
  long max_iters = 0;
  double snapshot_eps = 0.0;
  int n = 0;
  int m = 0;
  long rows = 0;
  PrimalDualPoint initial;
  PrimalDualPoint final_point;
};

std::string to_string(Termination status);

std::string format_trace_csv(const IterationTrace& trace);
/// Rows without snapshots; the two count columns are checked for shape only.
std::vector<TraceRow> parse_trace_csv(std::string_view text);

TraceSummary make_summary(const IterationTrace& trace, const std::string& instance,
                          const SolverConfig& cfg, const ProblemSpec& p);
std::string format_summary(const TraceSummary& s);
TraceSummary parse_summary(std::string_view text);

/// One line per recorded row: "<iter> <flags>" where every constraint
/// contributes one base-32 digit of snapshot flags.
std::string format_active(const IterationTrace& trace);
std::vector<std::pair<long, ActiveSnapshot>> parse_active(std::string_view text);

std::string sidecar_path(const std::string& csv_path, const std::string& extension);

/// Writes the CSV, ".summary" and ".active" files.
void write_trace_files(const std::string& csv_path, const IterationTrace& trace,
                       const TraceSummary& summary);

struct LoadedTrace {
  IterationTrace trace;
  TraceSummary summary;
};

/// Reads a trace and both sidecars back and cross-checks them.
LoadedTrace load_trace_files(const std::string& csv_path);

}  // namespace saddlekit
