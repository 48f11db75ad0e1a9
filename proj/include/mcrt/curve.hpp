#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mcrt/error.hpp"

namespace mcrt {

using Point = std::complex<double>;

enum class CurveKind : std::uint8_t { Walk = 0, SpaceFilling = 1, Brownian = 2, Synthetic = 3 };

inline const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::Walk: return "walk";
    case CurveKind::SpaceFilling: return "space-filling";
    case CurveKind::Brownian: return "brownian";
    case CurveKind::Synthetic: return "synthetic";
  }
  return "?";
}

// Polyline with time stamps; interpolated linearly between samples.
struct EmbeddedCurve {
  std::vector<Point> points;
  std::vector<double> times;
  CurveKind kind = CurveKind::Synthetic;

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.size() != times.size()) throw DomainError("curve: points and times differ in length");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (times[i] < times[i - 1]) throw DomainError("curve: times must be nondecreasing");
  }
};

struct WeightedPoint {
  Point z;
  double mass = 0.0;
};

}  // namespace mcrt
