#include "arcl/numcore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "arcl/numcore/error.hpp"

namespace arcl {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("Rng::below(0)");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::truncated_normal(double mean, double stddev, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("truncated_normal: empty interval");
  if (stddev == 0.0) return std::clamp(mean, lo, hi);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const double x = normal(mean, stddev);
    if (x >= lo && x <= hi) return x;
  }
  throw NumericalError("truncated_normal: acceptance region has negligible mass");
}

}  // namespace arcl
