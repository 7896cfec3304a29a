#pragma once

// Concentric-circle information constellations and their deformation toward
// On-Off signalling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "swipt/errors.hpp"
#include "swipt/numeric.hpp"

namespace swipt {

struct ConstellationMeta {
  std::size_t c = 0;     // outermost circle index
  double t = 0.0;        // radius step, sqrt(µW)
  std::size_t m_on = 0;  // points moved toward the On amplitude
  std::vector<std::size_t> on_indices;
  bool degenerate = false;  // M = 1: a single point at the origin
};

struct Constellation {
  std::vector<cplx> points;  // sqrt(µW)
  std::size_t m = 0;
  double pa = 0.0;            // µW
  std::optional<double> rho;  // nullopt: learned design
  ConstellationMeta meta;

  double average_power() const { return mean_power(points); }
};

// Maximum number of points on circle m (radius m*t) with spacing >= t.
inline std::size_t circle_capacity(std::size_t m) {
  if (m == 0) return 1;
  const double md = static_cast<double>(m);
  auto k = static_cast<std::size_t>(std::floor(kPi / std::asin(1.0 / (2.0 * md)) + 1e-9));
  // Guard the floor against rounding of the arcsine: the chord 2 m sin(pi/k)
  // must reach 1.
  constexpr double kTol = 1e-12;
  while (k > 1 && 2.0 * md * std::sin(kPi / static_cast<double>(k)) < 1.0 - kTol) --k;
  while (2.0 * md * std::sin(kPi / static_cast<double>(k + 1)) >= 1.0 - kTol) ++k;
  return k;
}

// Number of points on each circle 0..C for an M-point layout.
inline std::vector<std::size_t> circle_occupancy(std::size_t m_points) {
  std::vector<std::size_t> ks;
  std::size_t placed = 0;
  for (std::size_t circle = 0;; ++circle) {
    const std::size_t cap = circle_capacity(circle);
    if (placed + cap >= m_points) {
      ks.push_back(m_points - placed);
      return ks;
    }
    ks.push_back(cap);
    placed += cap;
  }
}

inline Constellation layout_info(std::size_t m_points, double pa) {
  if (m_points == 0) throw DomainError("layout_info: M must be >= 1");
  if (!(pa > 0.0) || !std::isfinite(pa)) throw DomainError("layout_info: P_a must be > 0");

  Constellation out;
  out.m = m_points;
  out.pa = pa;
  out.rho = 0.0;
  const auto ks = circle_occupancy(m_points);
  out.meta.c = ks.size() - 1;

  double den = 0.0;
  for (std::size_t circle = 0; circle < ks.size(); ++circle)
    den += static_cast<double>(ks[circle]) * static_cast<double>(circle * circle);
  if (den == 0.0) {
    out.meta.degenerate = true;
    out.meta.t = 0.0;
    out.points.assign(1, cplx{});
    return out;
  }
  const double t = std::sqrt(static_cast<double>(m_points) * pa / den);
  out.meta.t = t;

  out.points.reserve(m_points);
  for (std::size_t circle = 0; circle < ks.size(); ++circle) {
    const std::size_t k = ks[circle];
    const double radius = static_cast<double>(circle) * t;
    // Odd circles are rotated by half a slot relative to even ones.
    const double offset = (circle % 2 == 1) ? kPi / static_cast<double>(k) : 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double ph = kTwoPi * static_cast<double>(j) / static_cast<double>(k) + offset;
      out.points.push_back(std::polar(radius, ph));
    }
  }
  return out;
}

// argmin over m in 1..M of |p_star - m/M|; ties toward the smaller m.
inline std::size_t m_on_count(std::size_t m_points, double p_star) {
  if (m_points == 0) throw DomainError("m_on_count: M must be >= 1");
  if (!(p_star > 0.0 && p_star <= 1.0)) throw DomainError("m_on_count: p_star must be in (0, 1]");
  std::size_t best = 1;
  double best_gap = std::abs(p_star - 1.0 / static_cast<double>(m_points));
  for (std::size_t m = 2; m <= m_points; ++m) {
    const double gap = std::abs(p_star - static_cast<double>(m) / static_cast<double>(m_points));
    if (gap < best_gap) {
      best_gap = gap;
      best = m;
    }
  }
  return best;
}

struct OnOffPerturbation {
  std::vector<cplx> points;
  std::vector<std::size_t> on_indices;  // in ascending-phase order
  double target_modulus = 0.0;
  std::size_t usage_on = 0;
};

// Moves the largest-modulus points toward an equally phased circle and
// shrinks the rest so that sum_i usage_i |p_i|^2 stays equal to total_power.
// usage_i counts how many transmitted slots reference point i; target_slots
// is the number of On slots the On-Off law asks for.
inline OnOffPerturbation perturb_toward_onoff(std::span<const cplx> pts,
                                              std::span<const std::size_t> usage,
                                              std::size_t target_slots, double total_power,
                                              double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  const std::size_t n = pts.size();

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i)
    if (usage[i] > 0) order.push_back(i);
  if (order.empty()) throw DomainError("perturb_toward_onoff: no transmitted points");

  std::vector<double> mod(n), ph(n);
  double mod_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mod[i] = std::abs(pts[i]);
    ph[i] = phase_of(pts[i]);
    mod_scale = std::max(mod_scale, mod[i]);
  }
  const double tie_tol = 1e-9 * std::max(mod_scale, 1e-300);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(mod[a] - mod[b]) > tie_tol) return mod[a] > mod[b];
    if (ph[a] != ph[b]) return ph[a] < ph[b];
    return a < b;
  });

  std::vector<std::size_t> on;
  std::size_t used = 0;
  const auto gap = [&](std::size_t u) {
    return std::abs(static_cast<double>(u) - static_cast<double>(target_slots));
  };
  for (std::size_t idx : order) {
    if (!on.empty() && !(gap(used + usage[idx]) < gap(used))) break;
    on.push_back(idx);
    used += usage[idx];
  }
  std::stable_sort(on.begin(), on.end(), [&](std::size_t a, std::size_t b) {
    if (ph[a] != ph[b]) return ph[a] < ph[b];
    return a < b;
  });

  OnOffPerturbation out;
  out.points.assign(pts.begin(), pts.end());
  out.on_indices = on;
  out.usage_on = used;
  out.target_modulus = std::sqrt(total_power / static_cast<double>(used));
  const double r = out.target_modulus;
  const auto k_on = static_cast<double>(on.size());

  std::vector<char> is_on(n, 0);
  double on_power = 0.0;
  for (std::size_t i = 0; i < on.size(); ++i) {
    const std::size_t idx = on[i];
    is_on[idx] = 1;
    const double alpha = rho * (r - mod[idx]);
    const double beta = rho * (kTwoPi * static_cast<double>(i) / k_on - ph[idx]);
    out.points[idx] = std::polar(mod[idx] + alpha, ph[idx] + beta);
    on_power += static_cast<double>(usage[idx]) * std::norm(out.points[idx]);
  }

  double off_power = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (!is_on[i]) off_power += static_cast<double>(usage[i]) * std::norm(pts[i]);

  double s = 0.0;
  if (rho < 1.0 && off_power > 0.0) s = std::sqrt(std::max(0.0, total_power - on_power) / off_power);
  for (std::size_t i = 0; i < n; ++i)
    if (!is_on[i]) out.points[i] = pts[i] * s;

  // Only reachable when the off points carry no power (or rounding pushed the
  // On part past the budget): fall back to a common rescale.
  double actual = 0.0;
  for (std::size_t i = 0; i < n; ++i) actual += static_cast<double>(usage[i]) * std::norm(out.points[i]);
  if (actual > 0.0 && std::abs(actual - total_power) > 1e-12 * total_power) {
    const double g = std::sqrt(total_power / actual);
    for (auto& z : out.points) z *= g;
  }
  return out;
}

inline Constellation swipt_transform(const Constellation& base, double rho, double p_star) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("swipt_transform: rho must lie in [0, 1]");
  if (!base.rho || *base.rho != 0.0) throw DomainError("swipt_transform: base must have rho = 0");
  if (!(base.pa > 0.0)) throw DomainError("swipt_transform: P_a must be > 0");
  const std::size_t m_on = m_on_count(base.m, p_star);

  Constellation out = base;
  out.rho = rho;
  const std::vector<std::size_t> usage(base.points.size(), 1);
  auto pert = perturb_toward_onoff(base.points, usage, m_on,
                                   static_cast<double>(base.m) * base.pa, rho);
  // At rho = 0 the map is the identity; keep the base points bit-exact.
  if (rho > 0.0) out.points = std::move(pert.points);
  out.meta.m_on = m_on;
  out.meta.on_indices = std::move(pert.on_indices);
  return out;
}

}  // namespace swipt
