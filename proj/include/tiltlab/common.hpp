#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// running mean / variance, mergeable across threads
struct MeanAcc {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    double dx = x - mean;
    mean += dx / n;
    m2 += dx * (x - mean);
  }
  void merge(const MeanAcc& o) {
    if (o.n == 0) return;
    if (n == 0) { *this = o; return; }
    long t = n + o.n;
    double dx = o.mean - mean;
    mean += dx * o.n / t;
    m2 += o.m2 + dx * dx * double(n) * o.n / t;
    n = t;
  }
  double var() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double se() const { return n > 1 ? std::sqrt(var() / n) : 0.0; }
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  long n = 0;
};

// Binomial proportion. se is the half-width of the z=1 Wilson interval, which
// stays positive when k = 0 or k = n.
inline Estimate wilson(long k, long n) {
  if (n <= 0) return {0.0, 0.0, 0};
  double p = double(k) / n;
  double z2 = 1.0;
  double denom = 1.0 + z2 / n;
  double half = std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {p, half, n};
}

inline double rel_diff(double a, double b) {
  double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace tl
