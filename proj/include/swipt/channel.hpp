#pragma once

// Monte Carlo evaluation over the complex AWGN channel.
//
// SNR convention: snr = P_a / sigma^2 where sigma^2 is the total variance of
// the complex noise sample, i.e. sigma^2 / 2 per real dimension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "swipt/codebook.hpp"
#include "swipt/constellation.hpp"
#include "swipt/eh_model.hpp"
#include "swipt/errors.hpp"
#include "swipt/numeric.hpp"
#include "swipt/rng.hpp"

namespace swipt {

struct ChannelSpec {
  double snr = 50.0;
  double sigma_sq = 0.0;  // µW
  std::uint64_t seed = 1;

  static ChannelSpec from_snr(double snr, double pa, std::uint64_t seed) {
    if (!(snr > 0.0)) throw DomainError("ChannelSpec: snr must be > 0");
    if (!(pa > 0.0)) throw DomainError("ChannelSpec: P_a must be > 0");
    return {snr, std::isinf(snr) ? 0.0 : pa / snr, seed};
  }
  static ChannelSpec noiseless(std::uint64_t seed = 1) {
    return {std::numeric_limits<double>::infinity(), 0.0, seed};
  }
  double snr_db() const { return 10.0 * std::log10(snr); }
};

struct TradeoffPoint {
  double control = 0.0;
  double ser = 0.0;
  double pd_uw = 0.0;
  double ci_halfwidth = 0.0;
  std::size_t trials = 0;
};

struct SerResult {
  double ser = 0.0;
  double ci_halfwidth = 0.0;  // 3 sigma binomial
  std::size_t trials = 0;
  std::size_t errors = 0;
  bool degenerate = false;  // all codewords identical; ser is the (M-1)/M expectation
};

struct PowerResult {
  double mean_uw = 0.0;
  double ci_halfwidth = 0.0;  // 3 sigma of the sample mean
  std::size_t trials = 0;
};

inline double binomial_halfwidth(double p, std::size_t trials) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

inline void awgn_inplace(std::span<cplx> x, double sigma_sq, Rng& rng) {
  if (sigma_sq == 0.0) return;
  const double s = std::sqrt(sigma_sq / 2.0);
  for (auto& z : x) {
    const double re = rng.normal();
    const double im = rng.normal();
    z += cplx{s * re, s * im};
  }
}

inline std::vector<cplx> awgn(std::span<const cplx> x, const ChannelSpec& spec, Rng& rng) {
  std::vector<cplx> y(x.begin(), x.end());
  awgn_inplace(y, spec.sigma_sq, rng);
  return y;
}

// Single-codeword designs are views of n = 1 codebooks.
inline Codebook as_codebook(const Constellation& c) {
  auto cb = Codebook::from_symbols(c.points.size(), 1, c.pa, c.points);
  cb.rho = c.rho;
  cb.m_on = c.meta.m_on;
  cb.on_indices = c.meta.on_indices;
  if (cb.m >= 2) cb.achieved_dmin_sq = codebook_min_dist(cb);
  return cb;
}
inline const Codebook& as_codebook(const Codebook& c) { return c; }

// Minimum-Euclidean-distance decision; ties go to the lower index.
inline std::size_t ml_decode(const Codebook& cb, std::span<const cplx> y) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < cb.m; ++s) {
    double d = 0.0;
    for (std::size_t i = 0; i < cb.n && d < best_d; ++i) d += std::norm(y[i] - cb.symbol(s, i));
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

inline bool all_codewords_identical(const Codebook& cb) {
  for (std::size_t s = 1; s < cb.m; ++s)
    for (std::size_t i = 0; i < cb.n; ++i)
      if (cb.symbol(s, i) != cb.symbol(0, i)) return false;
  return true;
}

namespace detail {

inline constexpr std::size_t kTrialChunk = 1U << 15;

inline std::size_t chunk_count(std::size_t trials) { return (trials + kTrialChunk - 1) / kTrialChunk; }

inline std::size_t chunk_size(std::size_t chunk, std::size_t trials) {
  return std::min(kTrialChunk, trials - chunk * kTrialChunk);
}

// Chunk c always draws from the same substream, so results do not depend on
// the number of worker threads.
inline Rng chunk_rng(std::uint64_t seed, std::size_t chunk) {
  return Rng(seed).split(Stream::kNoise).split(chunk);
}

}  // namespace detail

// Decoder: callable (span<const cplx> y) -> message index.
template <class Decoder>
SerResult ser_mc(const Codebook& cb, const ChannelSpec& spec, std::size_t trials, Decoder&& decode) {
  if (trials < 1000) throw DomainError("ser_mc: trials must be >= 1000");
  if (cb.m == 0) throw DomainError("ser_mc: empty design");
  SerResult out;
  out.trials = trials;
  if (cb.m >= 2 && all_codewords_identical(cb)) {
    out.degenerate = true;
    out.ser = static_cast<double>(cb.m - 1) / static_cast<double>(cb.m);
    out.ci_halfwidth = 0.0;
    return out;
  }
  const std::size_t chunks = detail::chunk_count(trials);
  std::vector<std::size_t> errs(chunks, 0);
  parallel_chunks(chunks, [&](std::size_t c) {
    Rng rng = detail::chunk_rng(spec.seed, c);
    std::vector<cplx> y(cb.n);
    std::size_t e = 0;
    for (std::size_t t = 0, nt = detail::chunk_size(c, trials); t < nt; ++t) {
      const std::size_t s = rng.below(cb.m);
      for (std::size_t i = 0; i < cb.n; ++i) y[i] = cb.symbol(s, i);
      awgn_inplace(y, spec.sigma_sq, rng);
      if (decode(std::span<const cplx>(y)) != s) ++e;
    }
    errs[c] = e;
  });
  out.errors = std::accumulate(errs.begin(), errs.end(), std::size_t{0});
  out.ser = static_cast<double>(out.errors) / static_cast<double>(trials);
  out.ci_halfwidth = binomial_halfwidth(out.ser, trials);
  return out;
}

inline SerResult ser_mc(const Codebook& cb, const ChannelSpec& spec, std::size_t trials) {
  return ser_mc(cb, spec, trials, [&cb](std::span<const cplx> y) { return ml_decode(cb, y); });
}

inline SerResult ser_mc(const Constellation& c, const ChannelSpec& spec, std::size_t trials) {
  return ser_mc(as_codebook(c), spec, trials);
}

// Mean over trials and codeword positions of harvester(|y_i|^2).
inline PowerResult delivered_power_mc(const Codebook& cb, const ChannelSpec& spec,
                                      const Harvester& h, std::size_t trials) {
  if (trials < 1000) throw DomainError("delivered_power_mc: trials must be >= 1000");
  const std::size_t chunks = detail::chunk_count(trials);
  std::vector<double> sum(chunks, 0.0), sum_sq(chunks, 0.0);
  parallel_chunks(chunks, [&](std::size_t c) {
    // Separate substream family from ser_mc so the two estimates are not
    // forced to share draws.
    Rng rng = Rng(spec.seed).split(Stream::kEval).split(c);
    std::vector<cplx> y(cb.n);
    CompensatedSum s, s2;
    for (std::size_t t = 0, nt = detail::chunk_size(c, trials); t < nt; ++t) {
      const std::size_t msg = rng.below(cb.m);
      for (std::size_t i = 0; i < cb.n; ++i) y[i] = cb.symbol(msg, i);
      awgn_inplace(y, spec.sigma_sq, rng);
      double v = 0.0;
      for (auto z : y) v += harvest(h, std::norm(z));
      v /= static_cast<double>(cb.n);
      s += v;
      s2 += v * v;
    }
    sum[c] = s.value();
    sum_sq[c] = s2.value();
  });
  CompensatedSum s, s2;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sum[c];
    s2 += sum_sq[c];
  }
  const double nt = static_cast<double>(trials);
  PowerResult out;
  out.trials = trials;
  out.mean_uw = s.value() / nt;
  const double var = std::max(0.0, s2.value() / nt - out.mean_uw * out.mean_uw);
  out.ci_halfwidth = 3.0 * std::sqrt(var / nt);
  return out;
}

inline PowerResult delivered_power_mc(const Constellation& c, const ChannelSpec& spec,
                                      const Harvester& h, std::size_t trials) {
  return delivered_power_mc(as_codebook(c), spec, h, trials);
}

// Noiseless delivered power by enumeration over equiprobable messages.
inline double delivered_power_exact(const Codebook& cb, const Harvester& h) {
  CompensatedSum s;
  for (std::size_t msg = 0; msg < cb.m; ++msg)
    for (std::size_t i = 0; i < cb.n; ++i) s += harvest(h, std::norm(cb.symbol(msg, i)));
  return s.value() / static_cast<double>(cb.m * cb.n);
}

inline double delivered_power_exact(const Constellation& c, const Harvester& h) {
  return delivered_power_exact(as_codebook(c), h);
}

// designer: control -> Constellation or Codebook. Every control value is
// simulated with the same seed (common random numbers), which keeps the
// estimated curve smooth in the control.
template <class Designer>
std::vector<TradeoffPoint> rp_sweep(Designer&& designer, std::vector<double> controls,
                                    const ChannelSpec& spec, const Harvester& h, std::size_t trials) {
  if (controls.empty()) throw DomainError("rp_sweep: empty control grid");
  std::sort(controls.begin(), controls.end());
  std::vector<TradeoffPoint> rows;
  rows.reserve(controls.size());
  for (double ctl : controls) {
    const Codebook cb = as_codebook(designer(ctl));
    const auto ser = ser_mc(cb, spec, trials);
    const auto pd = delivered_power_mc(cb, spec, h, trials);
    rows.push_back({ctl, ser.ser, pd.mean_uw, ser.ci_halfwidth, trials});
  }
  return rows;
}

// Square QAM at average power P_a.
inline Constellation qam_reference(std::size_t m, double pa) {
  if (m != 4 && m != 16 && m != 64) throw DomainError("qam_reference: M must be 4, 16 or 64");
  if (!(pa > 0.0)) throw DomainError("qam_reference: P_a must be > 0");
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(m))));
  // Levels +-1, +-3, ...; average energy 2 (M - 1) / 3.
  const double scale = std::sqrt(pa * 3.0 / (2.0 * static_cast<double>(m - 1)));
  Constellation c;
  c.m = m;
  c.pa = pa;
  c.rho = 0.0;
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t q = 0; q < side; ++q) {
      const double re = 2.0 * static_cast<double>(i) - static_cast<double>(side - 1);
      const double im = 2.0 * static_cast<double>(q) - static_cast<double>(side - 1);
      c.points.emplace_back(scale * re, scale * im);
    }
  return c;
}

inline double ser_antipodal(double snr) { return q_function(std::sqrt(2.0 * snr)); }

inline double ser_square_qam(std::size_t m, double snr) {
  const double sq = std::sqrt(static_cast<double>(m));
  const double p = 2.0 * (1.0 - 1.0 / sq) * q_function(std::sqrt(3.0 * snr / static_cast<double>(m - 1)));
  return 1.0 - (1.0 - p) * (1.0 - p);
}

}  // namespace swipt
