#include "saddlekit/problem_io.hpp"

#include <set>
#include <sstream>

namespace saddlekit {

namespace {

KvValue upper_triplets(const Matrix& Q) {
  std::vector<KvValue> items;
  for (Eigen::Index j = 0; j < Q.cols(); ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      if (Q(i, j) != 0.0)
        items.push_back(KvValue::of_list({KvValue::of(static_cast<double>(i)),
                                          KvValue::of(static_cast<double>(j)),
                                          KvValue::of(Q(i, j))}));
  return KvValue::of_list(std::move(items));
}

Matrix read_triplets(const KvValue& v, int n) {
  Matrix Q = Matrix::Zero(n, n);
  std::set<std::pair<long, long>> seen;
  for (const auto& item : v.as_list()) {
    const auto& t = item.as_list();
    if (t.size() != 3) throw ParseError("expected a triplet [i, j, value]", item.line, item.column);
    const long i = t[0].as_integer();
    const long j = t[1].as_integer();
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw ParseError("matrix index out of range for n = " + std::to_string(n), item.line,
                       item.column);
    if (i > j)
      throw ParseError("only upper-triangle entries (i <= j) are allowed", item.line, item.column);
    if (!seen.insert({i, j}).second)
      throw ParseError("repeated matrix entry", item.line, item.column);
    Q(i, j) = t[2].as_number();
    Q(j, i) = Q(i, j);
  }
  return Q;
}

Vector read_vector(const KvValue& v, int n, const std::string& key) {
  Vector out = v.as_vector();
  if (out.size() != n)
    throw ParseError(key + " has " + std::to_string(out.size()) + " entries, expected " +
                         std::to_string(n),
                     v.line, v.column);
  return out;
}

std::string ckey(std::size_t j, const char* field) {
  return "constraints[" + std::to_string(j) + "]." + field;
}

}  // namespace

std::string format_problem(const ProblemSpec& p) {
  KvDocument doc(kProblemHeader);
  doc.add("n", static_cast<double>(p.num_vars()));
  doc.add("m", static_cast<double>(p.num_constraints()));
  doc.add("objective.c", KvValue::of_vector(p.c()));
  if (p.has_quadratic_objective()) doc.add("objective.Q", upper_triplets(p.Q()));
  for (std::size_t j = 0; j < p.constraints().size(); ++j) {
    const auto& con = p.constraints()[j];
    if (const auto* a = std::get_if<AffineConstraint>(&con)) {
      doc.add_word(ckey(j, "kind"), "affine");
      doc.add(ckey(j, "a"), KvValue::of_vector(a->a));
      doc.add(ckey(j, "b"), a->b);
    } else {
      const auto& q = std::get<QuadraticConstraint>(con);
      doc.add_word(ckey(j, "kind"), "quadratic");
      doc.add(ckey(j, "c"), KvValue::of_vector(q.c));
      doc.add(ckey(j, "Q"), upper_triplets(q.Q));
      doc.add(ckey(j, "b"), q.b);
    }
  }
  return doc.serialize();
}

ProblemSpec parse_problem(std::string_view text) {
  const KvDocument doc = KvDocument::parse(text, kProblemHeader);
  const long n = doc.at("n").as_integer();
  const long m = doc.at("m").as_integer();
  if (n < 1) throw ParseError("n must be at least 1", doc.at("n").line, doc.at("n").column);
  if (m < 0) throw ParseError("m must be nonnegative", doc.at("m").line, doc.at("m").column);
  const int ni = static_cast<int>(n);

  std::set<std::string> known{"n", "m", "objective.c", "objective.Q"};
  Vector c = read_vector(doc.at("objective.c"), ni, "objective.c");
  std::optional<Matrix> Q;
  if (const KvValue* q = doc.find("objective.Q")) Q = read_triplets(*q, ni);

  std::vector<Constraint> constraints;
  for (long j = 0; j < m; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    const KvValue& kind_v = doc.at(ckey(idx, "kind"));
    const std::string& kind = kind_v.as_word();
    known.insert(ckey(idx, "kind"));
    known.insert(ckey(idx, "b"));
    const double b = doc.at(ckey(idx, "b")).as_number();
    if (kind == "affine") {
      known.insert(ckey(idx, "a"));
      constraints.emplace_back(
          AffineConstraint{read_vector(doc.at(ckey(idx, "a")), ni, ckey(idx, "a")), b});
    } else if (kind == "quadratic") {
      known.insert(ckey(idx, "c"));
      known.insert(ckey(idx, "Q"));
      constraints.emplace_back(
          QuadraticConstraint{read_vector(doc.at(ckey(idx, "c")), ni, ckey(idx, "c")),
                              read_triplets(doc.at(ckey(idx, "Q")), ni), b});
    } else {
      throw ParseError("constraint kind must be affine or quadratic", kind_v.line, kind_v.column);
    }
  }
  for (const auto& key : doc.keys()) {
    if (!known.count(key)) {
      const KvValue& v = doc.at(key);
      throw ParseError("unexpected key '" + key + "' (m = " + std::to_string(m) + ")", v.line, 1);
    }
  }
  return ProblemSpec(std::move(c), std::move(Q), std::move(constraints));
}

ProblemSpec load_problem(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_problem(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.column());
  }
}

void save_problem(const ProblemSpec& p, const std::string& path) {
  write_text_file(path, format_problem(p));
}

}  // namespace saddlekit
