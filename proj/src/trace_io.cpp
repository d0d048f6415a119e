#include "saddlekit/trace_io.hpp"

#include <charconv>
#include <filesystem>
#include <sstream>

namespace saddlekit {

std::string to_string(Termination status) {
  return status == Termination::Converged ? "converged" : "iteration-limit";
}

namespace {

Termination parse_status(const KvValue& v) {
  const std::string& w = v.as_word();
  if (w == "converged") return Termination::Converged;
  if (w == "iteration-limit") return Termination::IterationLimit;
  throw ParseError("unknown status '" + w + "'", v.line, v.column);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = end + 1;
  }
  return out;
}

double parse_field(std::string_view field, int line, int column) {
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ParseError("malformed number '" + std::string(field) + "'", line, column);
  return v;
}

long parse_long(std::string_view field, int line, int column) {
  long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ParseError("malformed integer '" + std::string(field) + "'", line, column);
  return v;
}

}  // namespace

std::string format_trace_csv(const IterationTrace& trace) {
  std::ostringstream os;
  os << kTraceCsvHeader << '\n';
  for (const auto& r : trace.rows) {
    os << r.iter << ',' << format_number(r.kkt) << ',' << format_number(r.step_norm_P) << ','
       << format_number(r.aux_gap_P) << ',' << format_number(r.dist2_ref) << ','
       << format_number(r.distP_ref) << ',' << r.snapshot.num_dual_positive() << ','
       << r.snapshot.num_primal_tight() << '\n';
  }
  return os.str();
}

std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kTraceCsvHeader)
    throw ParseError(std::string("expected CSV header '") + kTraceCsvHeader + "'", 1, 1);
  std::vector<TraceRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    std::string_view line = lines[i];
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::vector<int> columns;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      columns.push_back(static_cast<int>(pos) + 1);
      fields.push_back(line.substr(pos, comma == std::string_view::npos ? line.size() - pos
                                                                        : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 8)
      throw ParseError("expected 8 fields, found " + std::to_string(fields.size()), line_no, 1);
    TraceRow r;
    r.iter = parse_long(fields[0], line_no, columns[0]);
    r.kkt = parse_field(fields[1], line_no, columns[1]);
    r.step_norm_P = parse_field(fields[2], line_no, columns[2]);
    r.aux_gap_P = parse_field(fields[3], line_no, columns[3]);
    r.dist2_ref = parse_field(fields[4], line_no, columns[4]);
    r.distP_ref = parse_field(fields[5], line_no, columns[5]);
    parse_long(fields[6], line_no, columns[6]);
    parse_long(fields[7], line_no, columns[7]);
    if (!rows.empty() && r.iter <= rows.back().iter)
      throw ParseError("iterations must be strictly increasing", line_no, 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

TraceSummary make_summary(const IterationTrace& trace, const std::string& instance,
                          const SolverConfig& cfg, const ProblemSpec& p) {
  TraceSummary s;
  s.instance = instance;
  s.algorithm = trace.algorithm;
  s.stepsize = trace.stepsize;
  s.iterations = trace.iterations;
  s.status = trace.status;
  s.final_kkt = trace.final_kkt;
  s.kkt_tol = cfg.kkt_tol;
  s.max_iters = cfg.max_iters;
  s.snapshot_eps = trace.snapshot_eps;
  s.n = p.num_vars();
  s.m = p.num_constraints();
  s.rows = static_cast<long>(trace.rows.size());
  s.initial = trace.initial;
  s.final_point = trace.final_point;
  return s;
}

std::string format_summary(const TraceSummary& s) {
  KvDocument doc(kSummaryHeader);
  doc.add_word("instance", s.instance);
  doc.add_word("algorithm", to_string(s.algorithm));
  doc.add("stepsize", s.stepsize);
  doc.add("iterations", static_cast<double>(s.iterations));
  doc.add_word("status", to_string(s.status));
  doc.add("final_kkt", s.final_kkt);
  doc.add("kkt_tol", s.kkt_tol);
  doc.add("max_iters", static_cast<double>(s.max_iters));
  doc.add("snapshot_eps", s.snapshot_eps);
  doc.add("n", static_cast<double>(s.n));
  doc.add("m", static_cast<double>(s.m));
  doc.add("rows", static_cast<double>(s.rows));
  doc.add("initial.x", KvValue::of_vector(s.initial.x));
  doc.add("initial.y", KvValue::of_vector(s.initial.y));
  doc.add("final.x", KvValue::of_vector(s.final_point.x));
  doc.add("final.y", KvValue::of_vector(s.final_point.y));
  return doc.serialize();
}

TraceSummary parse_summary(std::string_view text) {
  const KvDocument doc = KvDocument::parse(text, kSummaryHeader);
  TraceSummary s;
  s.instance = doc.at("instance").as_word();
  s.algorithm = parse_algorithm(doc.at("algorithm").as_word());
  s.stepsize = doc.at("stepsize").as_number();
  s.iterations = doc.at("iterations").as_integer();
  s.status = parse_status(doc.at("status"));
  s.final_kkt = doc.at("final_kkt").as_number();
  s.kkt_tol = doc.at("kkt_tol").as_number();
  s.max_iters = doc.at("max_iters").as_integer();
  s.snapshot_eps = doc.at("snapshot_eps").as_number();
  s.n = static_cast<int>(doc.at("n").as_integer());
  s.m = static_cast<int>(doc.at("m").as_integer());
  s.rows = doc.at("rows").as_integer();
  s.initial = {doc.at("initial.x").as_vector(), doc.at("initial.y").as_vector()};
  s.final_point = {doc.at("final.x").as_vector(), doc.at("final.y").as_vector()};
  if (s.final_point.x.size() != s.n || s.final_point.y.size() != s.m)
    throw ParseError("final point dimensions disagree with n and m", 1, 1);
  return s;
}

std::string format_active(const IterationTrace& trace) {
  std::ostringstream os;
  os << kActiveHeader << '\n';
  os.precision(17);
  os << "# eps " << format_number(trace.snapshot_eps) << '\n';
  for (const auto& r : trace.rows) os << r.iter << ' ' << r.snapshot.encode() << '\n';
  return os.str();
}

std::vector<std::pair<long, ActiveSnapshot>> parse_active(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kActiveHeader)
    throw ParseError(std::string("expected header '") + kActiveHeader + "'", 1, 1);
  std::vector<std::pair<long, ActiveSnapshot>> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const std::size_t space = line.find(' ');
    const std::string_view iter = line.substr(0, space);
    const std::string_view code =
        space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
    try {
      out.emplace_back(parse_long(iter, line_no, 1), ActiveSnapshot::decode(std::string(code)));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no, static_cast<int>(iter.size()) + 2);
    }
  }
  return out;
}

std::string sidecar_path(const std::string& csv_path, const std::string& extension) {
  std::filesystem::path p(csv_path);
  p.replace_extension(extension);
  return p.string();
}

void write_trace_files(const std::string& csv_path, const IterationTrace& trace,
                       const TraceSummary& summary) {
  write_text_file(csv_path, format_trace_csv(trace));
  write_text_file(sidecar_path(csv_path, ".summary"), format_summary(summary));
  write_text_file(sidecar_path(csv_path, ".active"), format_active(trace));
}

LoadedTrace load_trace_files(const std::string& csv_path) {
  LoadedTrace out;
  out.summary = parse_summary(read_text_file(sidecar_path(csv_path, ".summary")));
  auto rows = parse_trace_csv(read_text_file(csv_path));
  const auto snaps = parse_active(read_text_file(sidecar_path(csv_path, ".active")));
  if (snaps.size() != rows.size())
    throw std::runtime_error(csv_path + ": trace has " + std::to_string(rows.size()) +
                             " rows but the .active sidecar has " + std::to_string(snaps.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (snaps[i].first != rows[i].iter)
      throw std::runtime_error(csv_path + ": .active sidecar is out of step with the trace at row " +
                               std::to_string(i + 1));
    if (static_cast<int>(snaps[i].second.flags.size()) != out.summary.m)
      throw std::runtime_error(csv_path + ": snapshot width differs from m");
    rows[i].snapshot = snaps[i].second;
  }
  auto& t = out.trace;
  t.algorithm = out.summary.algorithm;
  t.stepsize = out.summary.stepsize;
  t.snapshot_eps = out.summary.snapshot_eps;
  t.rows = std::move(rows);
  t.initial = out.summary.initial;
  t.final_point = out.summary.final_point;
  t.iterations = out.summary.iterations;
  t.final_kkt = out.summary.final_kkt;
  t.status = out.summary.status;
  return out;
}

}  // namespace saddlekit
