#pragma once

// Coded modulation for block length n >= 1: greedy minimum-distance codebooks
// drawn from an Mn-point circle layout, their deformation toward On-Off
// signalling, and On-Off position codes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "swipt/constellation.hpp"
#include "swipt/errors.hpp"
#include "swipt/numeric.hpp"
#include "swipt/rng.hpp"

namespace swipt {

struct GreedyConfig {
  std::optional<double> dmin_init;  // squared distance; default t^2 of the Mn layout
  std::optional<double> epsilon;    // default 0.05 t^2
  std::size_t max_rounds = 200;
  std::size_t candidate_cap = 1'000'000;
  std::uint64_t seed = 1;
};

struct Codebook {
  std::size_t m = 0;
  std::size_t n = 0;
  double pa = 0.0;
  std::optional<double> rho;  // nullopt: learned design
  double achieved_dmin_sq = std::numeric_limits<double>::infinity();
  std::vector<cplx> base_points;
  std::vector<std::size_t> indices;  // m x n, row-major, into base_points

  // Construction metadata.
  double dmin_threshold = 0.0;
  std::size_t rounds = 0;
  bool warning = false;  // greedy adjustment hit max_rounds
  std::size_t m_on = 0;
  std::vector<std::size_t> on_indices;

  cplx symbol(std::size_t s, std::size_t i) const { return base_points[indices[s * n + i]]; }

  std::vector<cplx> codeword(std::size_t s) const {
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = symbol(s, i);
    return out;
  }

  // All M*n transmitted symbols, message-major.
  std::vector<cplx> symbols() const {
    std::vector<cplx> out;
    out.reserve(indices.size());
    for (auto idx : indices) out.push_back(base_points[idx]);
    return out;
  }

  double average_power() const {
    CompensatedSum s;
    for (auto idx : indices) s += std::norm(base_points[idx]);
    return s.value() / static_cast<double>(m * n);
  }

  std::vector<std::size_t> usage() const {
    std::vector<std::size_t> u(base_points.size(), 0);
    for (auto idx : indices) ++u[idx];
    return u;
  }

  static Codebook from_symbols(std::size_t m, std::size_t n, double pa,
                               std::vector<cplx> symbols) {
    Codebook cb;
    cb.m = m;
    cb.n = n;
    cb.pa = pa;
    cb.base_points = std::move(symbols);
    cb.indices.resize(m * n);
    for (std::size_t k = 0; k < m * n; ++k) cb.indices[k] = k;
    return cb;
  }
};

inline double codeword_distance_sq(const Codebook& cb, std::size_t a, std::size_t b) {
  double d = 0.0;
  for (std::size_t i = 0; i < cb.n; ++i) d += std::norm(cb.symbol(a, i) - cb.symbol(b, i));
  return d;
}

inline double codebook_min_dist(const Codebook& cb) {
  if (cb.m < 2) throw DomainError("codebook_min_dist: need at least two codewords");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < cb.m; ++a)
    for (std::size_t b = a + 1; b < cb.m; ++b) best = std::min(best, codeword_distance_sq(cb, a, b));
  return best;
}

namespace detail {

// Number of n-permutations of k items, saturating at limit + 1.
inline std::uint64_t permutation_count(std::uint64_t k, std::uint64_t n, std::uint64_t limit) {
  if (n > k) return 0;
  std::uint64_t c = 1;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t f = k - i;
    if (c > (limit + 1) / f) return limit + 1;
    c *= f;
    if (c > limit) return limit + 1;
  }
  return c;
}

// Candidate codewords as index tuples plus their coordinates (re, im
// interleaved) for fast distance evaluation.
struct CandidateSet {
  std::size_t n = 0;
  std::vector<std::uint32_t> idx;  // count x n
  std::vector<double> coord;       // count x 2n

  std::size_t size() const { return n == 0 ? 0 : idx.size() / n; }

  void push(std::span<const std::uint32_t> perm, std::span<const cplx> base) {
    for (auto i : perm) {
      idx.push_back(i);
      coord.push_back(base[i].real());
      coord.push_back(base[i].imag());
    }
  }

  double dist_sq(std::size_t a, std::size_t b) const {
    const double* pa = &coord[a * 2 * n];
    const double* pb = &coord[b * 2 * n];
    double d = 0.0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const double e = pa[k] - pb[k];
      d += e * e;
    }
    return d;
  }
};

inline CandidateSet enumerate_candidates(std::span<const cplx> base, std::size_t n,
                                         std::size_t cap, Rng rng) {
  const std::size_t k = base.size();
  CandidateSet cs;
  cs.n = n;
  const std::uint64_t total = permutation_count(k, n, cap);
  if (total == 0) return cs;
  if (total <= cap) {
    cs.idx.reserve(total * n);
    cs.coord.reserve(total * 2 * n);
    std::vector<std::uint32_t> perm(n);
    std::vector<char> used(k, 0);
    // Lexicographic depth-first enumeration.
    auto rec = [&](auto&& self, std::size_t depth) -> void {
      if (depth == n) {
        cs.push(perm, base);
        return;
      }
      for (std::size_t i = 0; i < k; ++i) {
        if (used[i]) continue;
        used[i] = 1;
        perm[depth] = static_cast<std::uint32_t>(i);
        self(self, depth + 1);
        used[i] = 0;
      }
    };
    rec(rec, 0);
    return cs;
  }
  // Seeded uniform sampling of distinct permutations.
  cs.idx.reserve(cap * n);
  cs.coord.reserve(cap * 2 * n);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(cap * 2);
  std::vector<std::uint32_t> pool(k);
  std::vector<std::uint32_t> perm(n);
  while (cs.size() < cap) {
    for (std::size_t i = 0; i < k; ++i) pool[i] = static_cast<std::uint32_t>(i);
    std::uint64_t key = 0;
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t j = d + rng.below(k - d);
      std::swap(pool[d], pool[j]);
      perm[d] = pool[d];
      key = key * static_cast<std::uint64_t>(k) + pool[d];
    }
    if (seen.insert(key).second) cs.push(perm, base);
  }
  return cs;
}

// One greedy pass. Stops early once `stop_after` codewords are selected.
inline std::vector<std::size_t> greedy_pass(const CandidateSet& cs, std::size_t first, double dmin,
                                            std::size_t stop_after) {
  std::vector<std::size_t> selected{first};
  std::vector<std::size_t> alive;
  alive.reserve(cs.size());
  for (std::size_t c = 0; c < cs.size(); ++c)
    if (c != first) alive.push_back(c);
  std::size_t cur = first;
  std::vector<std::size_t> next;
  next.reserve(alive.size());
  while (selected.size() < stop_after) {
    next.clear();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    std::size_t best_pos = 0;
    for (std::size_t c : alive) {
      const double d = cs.dist_sq(c, cur);
      if (d >= dmin && d > 0.0) {
        if (d < best_d) {
          best_d = d;
          best = c;
          best_pos = next.size();
        }
        next.push_back(c);
      }
    }
    if (next.empty()) break;
    next.erase(next.begin() + static_cast<std::ptrdiff_t>(best_pos));
    selected.push_back(best);
    cur = best;
    alive.swap(next);
  }
  return selected;
}

}  // namespace detail

inline Codebook build_info_codebook(std::size_t m, std::size_t n, double pa,
                                    const GreedyConfig& cfg = {}) {
  if (m == 0) throw DomainError("build_info_codebook: M must be >= 1");
  if (n == 0) throw DomainError("build_info_codebook: n must be >= 1");
  if (cfg.candidate_cap < m) throw DomainError("build_info_codebook: candidate_cap must be >= M");
  if (cfg.max_rounds == 0) throw DomainError("build_info_codebook: max_rounds must be >= 1");

  const Constellation base = layout_info(m * n, pa);
  const double t2 = base.meta.t * base.meta.t;
  const double eps = cfg.epsilon.value_or(0.05 * t2);
  if (m >= 2 && !(eps > 0.0)) throw DomainError("build_info_codebook: epsilon must be > 0");

  const Rng root(cfg.seed);
  const auto cands =
      detail::enumerate_candidates(base.points, n, cfg.candidate_cap, root.split(Stream::kCandidates));
  if (cands.size() < m)
    throw ConstructionError("build_info_codebook: candidate set smaller than M");

  Rng pick = root.split(Stream::kSelection);
  const std::size_t first = pick.below(cands.size());

  Codebook cb;
  cb.m = m;
  cb.n = n;
  cb.pa = pa;
  cb.rho = 0.0;
  cb.base_points = base.points;

  std::vector<std::size_t> chosen;
  if (m == 1) {
    chosen = {first};
  } else {
    // Thresholds live on the lattice d0 + j * eps. The step doubles while the
    // search keeps moving in one direction and the final bracket is bisected,
    // so the loop ends with passing and failing thresholds one eps apart.
    const double d0 = cfg.dmin_init.value_or(t2) > 0.0 ? cfg.dmin_init.value_or(t2) : eps;
    const auto j_min = static_cast<long long>(std::floor(-d0 / eps)) + 1;
    const auto at = [&](long long j) { return d0 + static_cast<double>(j) * eps; };
    std::optional<long long> best_ok;     // largest j yielding >= M
    std::optional<long long> worst_fail;  // smallest j yielding < M
    std::vector<std::size_t> best_sel;
    long long j = 0, step = 1;
    int dir = 0;
    std::size_t round = 0;
    bool converged = false;
    for (; round < cfg.max_rounds; ++round) {
      auto sel = detail::greedy_pass(cands, first, at(j), m + 1);
      const std::size_t got = sel.size();
      if (got >= m) {
        if (!best_ok || j > *best_ok) {
          best_ok = j;
          best_sel = std::move(sel);
          best_sel.resize(m);
        }
      } else if (!worst_fail || j < *worst_fail) {
        worst_fail = j;
      }
      if (got == m || (best_ok && worst_fail && *worst_fail - *best_ok <= 1)) {
        converged = true;
        break;
      }
      if (!best_ok && j == j_min) break;  // even the smallest threshold fails
      if (best_ok && worst_fail) {
        j = *best_ok + std::max<long long>(1, (*worst_fail - *best_ok) / 2);
        continue;
      }
      const int nd = got > m ? 1 : -1;
      step = nd == dir ? step * 2 : 1;
      dir = nd;
      j = std::max(j + nd * step, j_min);
    }
    cb.rounds = converged ? round + 1 : cfg.max_rounds;
    if (!best_ok) {
      cb.warning = true;
      auto sel = detail::greedy_pass(cands, first, 1e-12 * std::max(t2, 1e-300), m);
      if (sel.size() < m) throw ConstructionError("build_info_codebook: cannot reach M codewords");
      best_sel = std::move(sel);
      cb.dmin_threshold = 0.0;
    } else {
      cb.warning = !converged;
      cb.dmin_threshold = at(*best_ok);
    }
    chosen = std::move(best_sel);
  }

  cb.indices.reserve(m * n);
  for (std::size_t c : chosen)
    for (std::size_t i = 0; i < n; ++i) cb.indices.push_back(cands.idx[c * n + i]);

  const double p = cb.average_power();
  if (p > 0.0) {
    const double g = std::sqrt(pa / p);
    for (auto& z : cb.base_points) z *= g;
    cb.dmin_threshold *= g * g;
  }
  if (m >= 2) cb.achieved_dmin_sq = codebook_min_dist(cb);
  return cb;
}

// Moves the largest-modulus base points toward the On amplitude; shared base
// points move once for every codeword that references them.
inline Codebook swipt_codebook(const Codebook& cb, double rho, double p_star) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("swipt_codebook: rho must lie in [0, 1]");
  if (!cb.rho || *cb.rho != 0.0) throw DomainError("swipt_codebook: codebook must have rho = 0");
  const std::size_t slots = cb.m * cb.n;
  const std::size_t m_on = m_on_count(slots, p_star);

  Codebook out = cb;
  out.rho = rho;
  out.m_on = m_on;
  const auto usage = cb.usage();
  auto pert = perturb_toward_onoff(cb.base_points, usage, m_on,
                                   static_cast<double>(slots) * cb.pa, rho);
  out.on_indices = std::move(pert.on_indices);
  if (rho > 0.0) {
    out.base_points = std::move(pert.points);
    if (out.m >= 2) out.achieved_dmin_sq = codebook_min_dist(out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// On-Off position codes: N_on nonzero symbols of amplitude r_on per block.
// ---------------------------------------------------------------------------
struct OnOffBlockCode {
  std::size_t n = 0;
  std::size_t n_on = 0;
  double r_on = 0.0;  // sqrt(µW)
  double pa = 0.0;
  std::size_t m = 0;
  std::vector<std::vector<std::size_t>> support_sets;  // 0-based positions

  std::vector<cplx> codeword(std::size_t s) const {
    std::vector<cplx> x(n, cplx{});
    for (auto pos : support_sets[s]) x[pos] = r_on;
    return x;
  }

  Codebook to_codebook() const {
    std::vector<cplx> syms;
    syms.reserve(m * n);
    for (std::size_t s = 0; s < m; ++s) {
      auto x = codeword(s);
      syms.insert(syms.end(), x.begin(), x.end());
    }
    auto cb = Codebook::from_symbols(m, n, pa, std::move(syms));
    cb.rho = 1.0;
    if (m >= 2) cb.achieved_dmin_sq = codebook_min_dist(cb);
    return cb;
  }
};

inline unsigned long long binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned long long c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const unsigned long long num = n - k + i;
    if (c > std::numeric_limits<unsigned long long>::max() / num)
      return std::numeric_limits<unsigned long long>::max();
    c = c * num / i;
  }
  return c;
}

inline OnOffBlockCode onoff_block_code(std::size_t n, double pa, double p_star, std::size_t m_req) {
  if (n == 0 || n > 63) throw DomainError("onoff_block_code: n must be in [1, 63]");
  if (!(pa > 0.0)) throw DomainError("onoff_block_code: P_a must be > 0");
  if (m_req == 0) throw DomainError("onoff_block_code: M must be >= 1");
  OnOffBlockCode code;
  code.n = n;
  code.pa = pa;
  code.n_on = m_on_count(n, p_star);
  code.r_on = std::sqrt(static_cast<double>(n) * pa / static_cast<double>(code.n_on));
  const auto bound = binomial(n, code.n_on);
  if (m_req > bound)
    throw CapacityError("onoff_block_code: M exceeds C(n, N_on) = " + std::to_string(bound), bound);
  code.m = m_req;
  // Gosper's hack walks same-popcount masks in increasing order, which is
  // colexicographic order of the subsets.
  std::uint64_t mask = (std::uint64_t{1} << code.n_on) - 1;
  for (std::size_t s = 0; s < m_req; ++s) {
    std::vector<std::size_t> set;
    for (std::size_t b = 0; b < n; ++b)
      if (mask >> b & 1U) set.push_back(b);
    code.support_sets.push_back(std::move(set));
    const std::uint64_t c = mask & (~mask + 1);
    const std::uint64_t r = mask + c;
    mask = (((r ^ mask) >> 2) / c) | r;
  }
  return code;
}

inline std::size_t decode_onoff_block(std::span<const cplx> y, const OnOffBlockCode& code) {
  const std::size_t n = code.n;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = std::norm(y[i]);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return e[a] > e[b]; });
  std::uint64_t top = 0;
  for (std::size_t k = 0; k < code.n_on; ++k) top |= std::uint64_t{1} << order[k];

  std::size_t best = 0;
  double best_e = -1.0;
  for (std::size_t s = 0; s < code.m; ++s) {
    std::uint64_t mask = 0;
    double overlap = 0.0;
    for (auto pos : code.support_sets[s]) {
      mask |= std::uint64_t{1} << pos;
      overlap += e[pos];
    }
    if (mask == top) return s;
    if (overlap > best_e) {
      best_e = overlap;
      best = s;
    }
  }
  return best;
}

}  // namespace swipt
