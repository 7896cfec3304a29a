#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

namespace swipt {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Gaussian tail probability.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Phase in [0, 2pi); the origin maps to 0.
inline double phase_of(cplx z) {
  if (z == cplx{}) return 0.0;
  double a = std::atan2(z.imag(), z.real());
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

inline double mean_power(std::span<const cplx> pts) {
  CompensatedSum s;
  for (auto z : pts) s += std::norm(z);
  return pts.empty() ? 0.0 : s.value() / static_cast<double>(pts.size());
}

inline double relative_error(double got, double want) {
  const double den = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / den;
}

// Runs body(chunk) for chunk in [0, n_chunks) on up to hardware_concurrency
// threads. Chunks are assigned statically, so any per-chunk result written to
// chunk-indexed storage is independent of the worker count.
inline void parallel_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& body) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < n_chunks; c += workers) body(c);
    });
  }
}

}  // namespace swipt
