#pragma once

// Energy-harvester models: the three-layer tanh regression model, the
// sigmoidal saturation model, a synthetic measurement generator, and the
// On-Off signalling analysis built on top of them.
//
// Units: power in µW, amplitudes in sqrt(µW).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "swipt/errors.hpp"
#include "swipt/numeric.hpp"
#include "swipt/rng.hpp"

namespace swipt {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite input");
}

// ---------------------------------------------------------------------------
// Learned harvester: P_out = power_scale * max(0, f(P_in/input_scale) - f(0)),
// f(u) = tanh(w3 . tanh(w2 tanh(w1 u + b1) + b2) + b3).
// ---------------------------------------------------------------------------
struct EhModel {
  std::array<double, 3> w1{};  // 3x1
  std::array<double, 3> b1{};
  std::array<double, 6> w2{};  // 2x3, row-major
  std::array<double, 2> b2{};
  std::array<double, 2> w3{};  // 1x2
  double b3 = 0.0;
  double input_scale = 1.0;
  double power_scale = 1.0;
  double rmse = std::numeric_limits<double>::quiet_NaN();  // fit metadata, µW

  static constexpr std::size_t kParamCount = 17;
  using Params = std::array<double, kParamCount>;

  Params flat() const {
    Params p{};
    std::size_t k = 0;
    for (double v : w1) p[k++] = v;
    for (double v : b1) p[k++] = v;
    for (double v : w2) p[k++] = v;
    for (double v : b2) p[k++] = v;
    for (double v : w3) p[k++] = v;
    p[k] = b3;
    return p;
  }

  void assign(const Params& p) {
    std::size_t k = 0;
    for (double& v : w1) v = p[k++];
    for (double& v : b1) v = p[k++];
    for (double& v : w2) v = p[k++];
    for (double& v : b2) v = p[k++];
    for (double& v : w3) v = p[k++];
    b3 = p[k];
  }
};

namespace detail {

struct TanhNetTrace {
  std::array<double, 3> h1{};
  std::array<double, 2> h2{};
  double out = 0.0;
};

inline TanhNetTrace tanh_net(const EhModel::Params& p, double u) {
  TanhNetTrace t;
  for (int i = 0; i < 3; ++i) t.h1[i] = std::tanh(p[i] * u + p[3 + i]);
  for (int r = 0; r < 2; ++r) {
    double z = p[12 + r];
    for (int c = 0; c < 3; ++c) z += p[6 + 3 * r + c] * t.h1[c];
    t.h2[r] = std::tanh(z);
  }
  t.out = std::tanh(p[14] * t.h2[0] + p[15] * t.h2[1] + p[16]);
  return t;
}

// d out / d u for a single forward trace.
inline double tanh_net_slope(const EhModel::Params& p, const TanhNetTrace& t) {
  std::array<double, 3> dh1{};
  for (int i = 0; i < 3; ++i) dh1[i] = (1.0 - t.h1[i] * t.h1[i]) * p[i];
  std::array<double, 2> dh2{};
  for (int r = 0; r < 2; ++r) {
    double z = 0.0;
    for (int c = 0; c < 3; ++c) z += p[6 + 3 * r + c] * dh1[c];
    dh2[r] = (1.0 - t.h2[r] * t.h2[r]) * z;
  }
  return (1.0 - t.out * t.out) * (p[14] * dh2[0] + p[15] * dh2[1]);
}

// Accumulates coef * d out / d params into grad.
inline void tanh_net_backprop(const EhModel::Params& p, double u, const TanhNetTrace& t,
                              double coef, EhModel::Params& grad) {
  const double dz3 = coef * (1.0 - t.out * t.out);
  grad[14] += dz3 * t.h2[0];
  grad[15] += dz3 * t.h2[1];
  grad[16] += dz3;
  std::array<double, 2> dz2{};
  for (int r = 0; r < 2; ++r) dz2[r] = dz3 * p[14 + r] * (1.0 - t.h2[r] * t.h2[r]);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) grad[6 + 3 * r + c] += dz2[r] * t.h1[c];
    grad[12 + r] += dz2[r];
  }
  for (int c = 0; c < 3; ++c) {
    const double dh = dz2[0] * p[6 + c] + dz2[1] * p[9 + c];
    const double dz1 = dh * (1.0 - t.h1[c] * t.h1[c]);
    grad[c] += dz1 * u;
    grad[3 + c] += dz1;
  }
}

}  // namespace detail

inline double eval_eh(const EhModel& m, double p_in) {
  require_finite(p_in, "eval_eh");
  const auto p = m.flat();
  const double raw = detail::tanh_net(p, p_in / m.input_scale).out;
  const double zero = detail::tanh_net(p, 0.0).out;
  return m.power_scale * std::max(0.0, raw - zero);
}

// Value and dP_out/dP_in. The slope is 0 wherever the output is clipped.
inline std::pair<double, double> eval_eh_with_slope(const EhModel& m, double p_in) {
  require_finite(p_in, "eval_eh");
  const auto p = m.flat();
  const auto t = detail::tanh_net(p, p_in / m.input_scale);
  const double zero = detail::tanh_net(p, 0.0).out;
  const double g = t.out - zero;
  if (g <= 0.0) return {0.0, 0.0};
  return {m.power_scale * g, m.power_scale * detail::tanh_net_slope(p, t) / m.input_scale};
}

// ---------------------------------------------------------------------------
// Sigmoidal saturation model.
// ---------------------------------------------------------------------------
struct ModelC {
  double a = 0.0;   // steepness, 1/µW
  double b = 0.0;   // inflection input power, µW
  double ls = 0.0;  // saturation power, µW

  double omega() const { return 1.0 / (1.0 + std::exp(a * b)); }
};

inline double model_c_eval(const ModelC& m, double p_in) {
  require_finite(p_in, "model_c_eval");
  const double om = m.omega();
  const double s = 1.0 / (1.0 + std::exp(-m.a * (p_in - m.b)));
  return m.ls * (s - om) / (1.0 - om);
}

inline std::pair<double, double> model_c_with_slope(const ModelC& m, double p_in) {
  require_finite(p_in, "model_c_eval");
  const double om = m.omega();
  const double s = 1.0 / (1.0 + std::exp(-m.a * (p_in - m.b)));
  const double val = m.ls * (s - om) / (1.0 - om);
  const double slope = m.a * m.ls * s * (1.0 - s) / (1.0 - om);
  return {val, slope};
}

// Canonical stand-in for the measured harvester: L_s = 40 µW, b = 300 µW and
// the steepness for which argmax_x f(x)/x sits at 317 µW.
inline constexpr double kCanonicalKnee = 317.0;
inline constexpr double kCanonicalLs = 40.0;
inline constexpr double kCanonicalB = 300.0;

inline double solve_canonical_steepness() {
  // g(a) = x f'(x) - f(x) at the knee; positive below the root, negative above.
  const auto g = [](double a) {
    const auto [v, s] = model_c_with_slope(ModelC{a, kCanonicalB, kCanonicalLs}, kCanonicalKnee);
    return kCanonicalKnee * s - v;
  };
  double lo = 0.05, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline const ModelC& canonical_model() {
  static const ModelC m{solve_canonical_steepness(), kCanonicalB, kCanonicalLs};
  return m;
}

inline double canonical_curve(double p_in) { return model_c_eval(canonical_model(), p_in); }

// ---------------------------------------------------------------------------
// Harvester handle used by the channel simulator and the trainer.
// ---------------------------------------------------------------------------
struct LinearHarvester {
  double gain = 1.0;
};

using Harvester = std::variant<EhModel, ModelC, LinearHarvester>;

inline double harvest(const Harvester& h, double p_in) {
  return std::visit(
      [p_in](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EhModel>)
          return eval_eh(m, p_in);
        else if constexpr (std::is_same_v<T, ModelC>)
          return model_c_eval(m, p_in);
        else
          return m.gain * p_in;
      },
      h);
}

inline std::pair<double, double> harvest_with_slope(const Harvester& h, double p_in) {
  return std::visit(
      [p_in](const auto& m) -> std::pair<double, double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EhModel>)
          return eval_eh_with_slope(m, p_in);
        else if constexpr (std::is_same_v<T, ModelC>)
          return model_c_with_slope(m, p_in);
        else
          return {m.gain * p_in, m.gain};
      },
      h);
}

// ---------------------------------------------------------------------------
// Measurement data.
// ---------------------------------------------------------------------------
enum class DataSource { kSynthetic, kFile };

struct PowerSample {
  double p_in = 0.0;   // µW
  double p_out = 0.0;  // µW
};

struct PowerDataset {
  std::vector<PowerSample> pairs;
  DataSource source = DataSource::kSynthetic;

  void validate() const {
    if (pairs.empty()) throw DomainError("PowerDataset: empty");
    for (const auto& s : pairs) {
      if (!std::isfinite(s.p_in) || !std::isfinite(s.p_out) || s.p_in < 0.0 || s.p_out < 0.0)
        throw DomainError("PowerDataset: values must be finite and >= 0");
    }
  }
};

// Log-spaced inputs on [0.1, p_max] plus the origin, outputs from the
// canonical curve with multiplicative Gaussian noise, clipped at 0.
inline PowerDataset synth_dataset(std::size_t n_points, double p_max, double noise_rel,
                                  std::uint64_t seed) {
  if (n_points < 2) throw DomainError("synth_dataset: n_points must be >= 2");
  if (!(p_max > 0.1)) throw DomainError("synth_dataset: p_max must exceed 0.1 µW");
  if (!(noise_rel >= 0.0)) throw DomainError("synth_dataset: noise_rel must be >= 0");
  Rng rng = Rng(seed).split(Stream::kData);
  PowerDataset ds;
  ds.source = DataSource::kSynthetic;
  ds.pairs.reserve(n_points);
  ds.pairs.push_back({0.0, 0.0});
  const std::size_t n_log = n_points - 1;
  const double l0 = std::log(0.1), l1 = std::log(p_max);
  for (std::size_t i = 0; i < n_log; ++i) {
    const double frac = n_log == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n_log - 1);
    const double p = std::exp(l0 + frac * (l1 - l0));
    double out = canonical_curve(p);
    if (noise_rel > 0.0) out *= 1.0 + noise_rel * rng.normal();
    ds.pairs.push_back({p, std::max(0.0, out)});
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Regression of the tanh model.
// ---------------------------------------------------------------------------
struct FitHyper {
  double learning_rate = 0.01;
  std::size_t epochs = 20000;
  std::uint64_t seed = 1;
  double init_scale = 1.0;
};

struct EhLoss {
  double value = 0.0;
  EhModel::Params grad{};
};

// Mean squared error over normalized data of g(u) = f(u) - f(0) against v.
inline EhLoss eh_fit_loss(const EhModel::Params& p, std::span<const double> u,
                          std::span<const double> v) {
  EhLoss out;
  const auto t0 = detail::tanh_net(p, 0.0);
  const double inv_m = 1.0 / static_cast<double>(u.size());
  double zero_coef = 0.0;
  CompensatedSum loss;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto t = detail::tanh_net(p, u[i]);
    const double r = t.out - t0.out - v[i];
    loss += r * r;
    const double c = 2.0 * r * inv_m;
    detail::tanh_net_backprop(p, u[i], t, c, out.grad);
    zero_coef -= c;
  }
  detail::tanh_net_backprop(p, 0.0, t0, zero_coef, out.grad);
  out.value = loss.value() * inv_m;
  return out;
}

inline double eh_rmse(const EhModel& m, const PowerDataset& data) {
  CompensatedSum s;
  for (const auto& x : data.pairs) {
    const double r = eval_eh(m, x.p_in) - x.p_out;
    s += r * r;
  }
  return std::sqrt(s.value() / static_cast<double>(data.pairs.size()));
}

// Full-batch fit with adaptive-moment steps. Deterministic given hyper.seed.
inline EhModel fit_eh(const PowerDataset& data, const FitHyper& hyper = {}) {
  data.validate();
  if (data.pairs.size() < 10) throw DomainError("fit_eh: need at least 10 points");
  double p_max = 0.0, p_min_pos = std::numeric_limits<double>::infinity(), out_max = 0.0;
  for (const auto& s : data.pairs) {
    p_max = std::max(p_max, s.p_in);
    if (s.p_in > 0.0) p_min_pos = std::min(p_min_pos, s.p_in);
    out_max = std::max(out_max, s.p_out);
  }
  if (!(p_max >= 10.0 * p_min_pos)) throw DomainError("fit_eh: inputs must span a decade");
  if (!(hyper.learning_rate > 0.0) || !(hyper.init_scale > 0.0))
    throw DomainError("fit_eh: learning_rate and init_scale must be positive");

  EhModel model;
  model.input_scale = p_max;
  model.power_scale = out_max > 0.0 ? out_max / 0.9 : 1.0;

  std::vector<double> u, v;
  u.reserve(data.pairs.size());
  v.reserve(data.pairs.size());
  for (const auto& s : data.pairs) {
    u.push_back(s.p_in / model.input_scale);
    v.push_back(s.p_out / model.power_scale);
  }

  Rng rng = Rng(hyper.seed).split(Stream::kInit);
  EhModel::Params p{};
  for (double& x : p) x = rng.uniform(-hyper.init_scale, hyper.init_scale);

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  EhModel::Params m1{}, m2{};
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const EhLoss l = eh_fit_loss(p, u, v);
    if (!std::isfinite(l.value)) throw FitError("fit_eh: loss diverged", epoch);
    b1t *= kBeta1;
    b2t *= kBeta2;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m1[k] = kBeta1 * m1[k] + (1.0 - kBeta1) * l.grad[k];
      m2[k] = kBeta2 * m2[k] + (1.0 - kBeta2) * l.grad[k] * l.grad[k];
      p[k] -= hyper.learning_rate * (m1[k] / (1.0 - b1t)) / (std::sqrt(m2[k] / (1.0 - b2t)) + kEps);
    }
    for (double x : p)
      if (!std::isfinite(x)) throw FitError("fit_eh: parameters diverged", epoch);
  }
  model.assign(p);
  model.rmse = eh_rmse(model, data);
  return model;
}

// ---------------------------------------------------------------------------
// On-Off signalling: amplitude 0 with probability 1 - p_on, sqrt(P_a/p_on)
// with probability p_on.
// ---------------------------------------------------------------------------
struct OnOffLaw {
  double p_on = 1.0;
  double amplitude = 0.0;  // sqrt(µW)
  double pa = 0.0;         // µW
};

inline OnOffLaw make_onoff_law(double pa, double p_on) {
  if (!(p_on > 0.0 && p_on <= 1.0)) throw DomainError("OnOffLaw: p_on must be in (0, 1]");
  if (!(pa >= 0.0)) throw DomainError("OnOffLaw: P_a must be >= 0");
  return {p_on, std::sqrt(pa / p_on), pa};
}

// Noiseless delivered power p_on * f(P_a / p_on).
inline double onoff_delivered(double pa, double p_on, const Harvester& h) {
  if (!(pa > 0.0)) throw DomainError("onoff_delivered: P_a must be > 0");
  if (!(p_on > 0.0 && p_on <= 1.0)) throw DomainError("onoff_delivered: p_on must be in (0, 1]");
  return std::max(0.0, p_on * harvest(h, pa / p_on));
}

// argmax over p_on in {1/G, 2/G, ..., 1}; ties go to the larger p_on.
inline double optimal_pon(double pa, const Harvester& h, std::size_t grid_size = 1000) {
  if (!(pa > 0.0)) throw DomainError("optimal_pon: P_a must be > 0");
  if (grid_size < 100) throw DomainError("optimal_pon: grid_size must be >= 100");
  double best_p = 1.0, best_v = -1.0;
  for (std::size_t k = 1; k <= grid_size; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(grid_size);
    const double v = onoff_delivered(pa, p, h);
    if (v >= best_v) {
      best_v = v;
      best_p = p;
    }
  }
  return best_p;
}

inline double pon_approx(double pa) {
  if (!(pa > 0.0)) throw DomainError("pon_approx: P_a must be > 0");
  return std::min(pa / kCanonicalKnee, 1.0);
}

}  // namespace swipt
