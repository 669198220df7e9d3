#pragma once

#include <cmath>

#include "tiltlab/common.hpp"
#include "tiltlab/potential.hpp"

// point K, d = 3, R = 3; small enough for dense oracles at N = 2, 3
inline tl::TiltParams small_params(int N, double u = 2.0) {
  tl::TiltParams p;
  p.K = tl::CompactShape::point({0, 0, 0});
  p.delta = 0.7;
  p.eta = 0.9;
  p.eps = 0.5;
  p.R = 3;
  p.N = N;
  p.u = u;
  return p;
}

inline bool within_se(const tl::Estimate& e, double target, double k = 3.0) {
  return std::abs(e.value - target) <= k * e.se;
}

inline bool agree_se(const tl::Estimate& a, const tl::Estimate& b, double k = 3.0) {
  return std::abs(a.value - b.value) <= k * std::hypot(a.se, b.se);
}
