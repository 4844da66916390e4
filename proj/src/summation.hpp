#pragma once

#include <cmath>

namespace chi2r::detail {

// Neumaier compensated sum.  Order of add() calls fixes the result bit for
// bit, so callers iterate cells in ascending index.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace chi2r::detail
