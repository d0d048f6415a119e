#include "saddlekit/solution_set.hpp"

#include <algorithm>
#include <cmath>

namespace saddlekit {

SegmentSet SegmentSet::point(Vector p) {
  SegmentSet s;
  s.end = p;
  s.start = std::move(p);
  return s;
}

SegmentSet SegmentSet::segment(Vector a, Vector b) {
  SegmentSet s;
  s.start = std::move(a);
  s.end = std::move(b);
  return s;
}

SegmentSet SegmentSet::full_line(Vector a, Vector b) {
  SegmentSet s = segment(std::move(a), std::move(b));
  s.line = true;
  return s;
}

Vector SegmentSet::project(const Vector& v) const {
  const Vector dir = end - start;
  const double len2 = dir.squaredNorm();
  if (len2 == 0.0) return start;
  double t = (v - start).dot(dir) / len2;
  if (!line) t = std::clamp(t, 0.0, 1.0);
  return start + t * dir;
}

double SegmentSet::dist(const Vector& v) const { return (v - project(v)).norm(); }

Vector SegmentSet::sample(std::mt19937_64& rng) const {
  if (line) throw std::logic_error("cannot sample uniformly from a line");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return start + unit(rng) * (end - start);
}

double KnownSolution::dist(const PrimalDualPoint& z) const {
  return std::hypot(x_set.dist(z.x), y_set.dist(z.y));
}

double KnownSolution::dist_local(const PrimalDualPoint& z) const {
  if (!has_local()) throw std::logic_error("reduced solution set unavailable");
  return std::hypot(local_x_set->dist(z.x), local_y_set->dist(z.y));
}

PrimalDualPoint KnownSolution::sample(std::mt19937_64& rng) const {
  Vector x = x_set.sample(rng);
  Vector y = y_set.sample(rng);
  return {std::move(x), std::move(y)};
}

}  // namespace saddlekit
