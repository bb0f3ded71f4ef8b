#pragma once

// Reference implementations used only by the tests. They follow the textbook
// definitions directly and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "histoclahe/histogram.hpp"
#include "histoclahe/raster.hpp"
#include "histoclahe/tensor.hpp"

namespace histoclahe::oracle {

inline Raster random_raster(std::mt19937_64& rng, int w, int h, int lo = 0, int hi = 255) {
  std::uniform_int_distribution<int> dist(lo, hi);
  Raster r(w, h);
  for (auto& p : r.pixels) p = static_cast<std::uint8_t>(dist(rng));
  return r;
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

/// Global HE by enumeration: for every pixel, count the pixels not brighter
/// than it. Rounds half up in floating point, which is exact here because a
/// true .5 is representable and the denominator is small.
inline Raster brute_force_equalize(const Raster& in) {
  const auto n = static_cast<double>(in.pixels.size());
  const std::uint8_t darkest = *std::min_element(in.pixels.begin(), in.pixels.end());
  auto count_le = [&](int v) {
    return static_cast<double>(std::count_if(in.pixels.begin(), in.pixels.end(), [v](std::uint8_t p) { return p <= v; }));
  };
  const double cdf_min = count_le(darkest);
  Raster out = in;
  if (cdf_min == n) return out;
  for (auto& p : out.pixels) {
    const double scaled = 255.0 * (count_le(p) - cdf_min) / (n - cdf_min);
    p = static_cast<std::uint8_t>(std::floor(scaled + 0.5));
  }
  return out;
}

/// Clipping followed by one-count-at-a-time round-robin redistribution from bin 0.
inline Histogram256 scripted_redistribution(const Histogram256& hist, std::uint64_t limit) {
  Histogram256 out = hist;
  std::uint64_t excess = 0;
  for (auto& b : out.bins) {
    while (b > limit) {
      --b;
      ++excess;
    }
  }
  for (std::uint64_t e = 0; e < excess; ++e) ++out.bins[e % 256];
  return out;
}

/// Central differences of a scalar function of a tensor, element by element.
inline Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, Tensor x, double eps) {
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double plus = f(x);
    x[i] = saved - eps;
    const double minus = f(x);
    x[i] = saved;
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

/// max |a - n| / max(|a|, |n|, 1e-12)
inline double max_relative_error(const Tensor& analytic, const Tensor& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-12}));
  }
  return worst;
}

/// Scalar probe L = sum(r * y) used to check a layer's backward pass with an
/// arbitrary upstream gradient r.
inline double project(const Tensor& y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

}  // namespace histoclahe::oracle
