#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace copp {

// A finite union of disjoint closed intervals on the extended real line.
class PredictionSet {
 public:
  struct Interval {
    double lo;
    double hi;
  };

  PredictionSet() = default;

  static PredictionSet empty() { return PredictionSet(); }

  static PredictionSet interval(double lo, double hi) {
    PredictionSet s;
    if (!(lo <= hi)) throw std::invalid_argument("interval requires lo <= hi");
    s.pieces_.push_back({lo, hi});
    return s;
  }

  static PredictionSet whole_line() {
    return interval(-std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity());
  }

  // Builds from possibly unsorted, possibly overlapping pieces.
  static PredictionSet from_pieces(std::vector<Interval> pieces) {
    for (const auto& p : pieces)
      if (!(p.lo <= p.hi)) throw std::invalid_argument("piece with lo > hi");
    std::sort(pieces.begin(), pieces.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    PredictionSet s;
    for (const auto& p : pieces) {
      if (!s.pieces_.empty() && p.lo <= s.pieces_.back().hi) {
        s.pieces_.back().hi = std::max(s.pieces_.back().hi, p.hi);
      } else {
        s.pieces_.push_back(p);
      }
    }
    return s;
  }

  const std::vector<Interval>& pieces() const { return pieces_; }
  bool is_empty() const { return pieces_.empty(); }

  bool unbounded() const {
    for (const auto& p : pieces_)
      if (std::isinf(p.lo) || std::isinf(p.hi)) return true;
    return false;
  }

  bool contains(double y) const {
    for (const auto& p : pieces_)
      if (y >= p.lo && y <= p.hi) return true;
    return false;
  }

  // Sum of piece lengths; +inf if any piece is unbounded.
  double lebesgue_length() const {
    double len = 0.0;
    for (const auto& p : pieces_) {
      if (std::isinf(p.lo) || std::isinf(p.hi))
        return std::numeric_limits<double>::infinity();
      len += p.hi - p.lo;
    }
    return len;
  }

 private:
  std::vector<Interval> pieces_;
};

}  // namespace copp
