#pragma once

#include "saddlekit/problem.hpp"

#include <functional>
#include <random>
#include <vector>

namespace saddlekit {

/// A closed segment [start, end] (a point when start == end), or the full
/// line through start and end when `line` is set.
struct SegmentSet {
  Vector start;
  Vector end;
  bool line = false;

  static SegmentSet point(Vector p);
  static SegmentSet segment(Vector a, Vector b);
  static SegmentSet full_line(Vector a, Vector b);

  Vector project(const Vector& v) const;
  double dist(const Vector& v) const;
  /// Uniform on the segment; undefined for lines.
  Vector sample(std::mt19937_64& rng) const;
};

/// Exact description of a solution set S* = S*_x x S*_y, optionally with
/// the reduced-system solution set S*_L used by the local modulus.
struct KnownSolution {
  SegmentSet x_set;
  SegmentSet y_set;
  std::optional<SegmentSet> local_x_set;
  std::optional<SegmentSet> local_y_set;
  /// A point in the relative interior of S*.
  PrimalDualPoint representative;
  /// Hand-picked points whose ratios bound the moduli from above, as a
  /// function of the region radius tau.
  std::function<std::vector<PrimalDualPoint>(double tau)> witnesses;

  double dist(const PrimalDualPoint& z) const;
  bool has_local() const { return local_x_set.has_value() && local_y_set.has_value(); }
  double dist_local(const PrimalDualPoint& z) const;
  PrimalDualPoint sample(std::mt19937_64& rng) const;
};

}  // namespace saddlekit
