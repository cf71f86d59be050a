#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace opeval {

// Neumaier-compensated accumulator. All closed-form sums and estimator
// accumulations run through this in a fixed iteration order so results are
// reproducible across platforms and immune to cancellation at the scales the
// variance formulas produce.
class KahanSum {
 public:
  void add(double x) noexcept {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_total(const std::vector<double>& xs) noexcept {
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

// Banker's rounding of v to the nearest integer, halves to even.
inline long long round_half_even(double v) noexcept {
  double f = std::floor(v);
  double diff = v - f;
  long long base = static_cast<long long>(f);
  if (diff > 0.5) return base + 1;
  if (diff < 0.5) return base;
  return (base % 2 == 0) ? base : base + 1;
}

}  // namespace opeval
