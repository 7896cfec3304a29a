#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "swipt/channel.hpp"
#include "swipt/codebook.hpp"

using namespace swipt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

void check_contract(const Codebook& cb) {
  REQUIRE(cb.indices.size() == cb.m * cb.n);
  CHECK_THAT(cb.average_power(), WithinRel(cb.pa, 1e-9));
  for (std::size_t a = 0; a < cb.m; ++a)
    for (std::size_t b = a + 1; b < cb.m; ++b) CHECK(codeword_distance_sq(cb, a, b) >= cb.achieved_dmin_sq);
  if (cb.rho && *cb.rho == 0.0) {
    for (std::size_t s = 0; s < cb.m; ++s) {
      std::set<std::size_t> seen;
      for (std::size_t i = 0; i < cb.n; ++i) seen.insert(cb.indices[s * cb.n + i]);
      CHECK(seen.size() == cb.n);
    }
  }
}

}  // namespace

TEST_CASE("two-codeword example", "[codebook]") {
  const auto cb = build_info_codebook(2, 1, 5.0);
  check_contract(cb);
  std::multiset<double> mods;
  for (auto z : cb.symbols()) mods.insert(std::round(std::abs(z) * 1e9) / 1e9);
  CHECK(mods.count(0.0) == 1);
  CHECK_THAT(std::abs(cb.symbol(0, 0) - cb.symbol(1, 0)), WithinRel(std::sqrt(10.0), 1e-12));
  CHECK_THAT(cb.achieved_dmin_sq, WithinRel(10.0, 1e-12));
  CHECK_THAT(codebook_min_dist(cb), WithinRel(10.0, 1e-12));
}

TEST_CASE("single codeword and min distance edge cases", "[codebook]") {
  const auto one = build_info_codebook(1, 2, 5.0);
  CHECK(one.m == 1);
  CHECK(std::isinf(one.achieved_dmin_sq));
  CHECK_THROWS_AS(codebook_min_dist(one), DomainError);
  const auto dup = Codebook::from_symbols(2, 2, 1.0, {cplx{1, 0}, cplx{0, 1}, cplx{1, 0}, cplx{0, 1}});
  CHECK(codebook_min_dist(dup) == 0.0);
}

TEST_CASE("greedy builds are deterministic and honour the contract", "[codebook]") {
  GreedyConfig cfg;
  cfg.seed = 4;
  const auto a = build_info_codebook(16, 2, 5.0, cfg);
  const auto b = build_info_codebook(16, 2, 5.0, cfg);
  CHECK(a.indices == b.indices);
  CHECK(a.base_points == b.base_points);
  CHECK(a.achieved_dmin_sq == b.achieved_dmin_sq);
  check_contract(a);
  CHECK_FALSE(a.warning);
  CHECK(a.achieved_dmin_sq >= a.dmin_threshold * (1.0 - 1e-12));

  const auto s = build_info_codebook(4, 2, 5.0, cfg);
  check_contract(s);
  const auto c = build_info_codebook(8, 3, 2.0, cfg);
  check_contract(c);
}

TEST_CASE("sampled candidate sets", "[codebook]") {
  GreedyConfig cfg;
  cfg.candidate_cap = 5000;
  const auto cb = build_info_codebook(8, 3, 5.0, cfg);
  check_contract(cb);
  cfg.candidate_cap = 4;
  CHECK_THROWS_AS(build_info_codebook(8, 3, 5.0, cfg), DomainError);
}

TEST_CASE("a tiny round budget falls back with a warning", "[codebook]") {
  GreedyConfig cfg;
  cfg.max_rounds = 1;
  cfg.dmin_init = 1e4;
  const auto cb = build_info_codebook(16, 2, 5.0, cfg);
  CHECK(cb.warning);
  CHECK(cb.indices.size() == 32);
  CHECK_THAT(cb.average_power(), WithinRel(5.0, 1e-9));
}

TEST_CASE("swipt codebook endpoints and bookkeeping", "[codebook]") {
  const auto cb = build_info_codebook(16, 2, 5.0);
  const double p_star = 5.0 / 317.0;
  const auto same = swipt_codebook(cb, 0.0, p_star);
  CHECK(same.base_points == cb.base_points);
  CHECK(same.indices == cb.indices);
  CHECK_THROWS_AS(swipt_codebook(cb, -0.1, p_star), DomainError);

  for (double pa : {5.0, 120.0}) {
    const auto base = build_info_codebook(16, 2, pa);
    const double ps = std::min(pa / 317.0, 1.0);
    for (double rho : {0.3, 0.7, 1.0}) {
      const auto s = swipt_codebook(base, rho, ps);
      CHECK_THAT(s.average_power(), WithinRel(pa, 1e-9));
      CHECK(s.m_on == m_on_count(32, ps));
    }
    const auto full = swipt_codebook(base, 1.0, ps);
    const auto usage = full.usage();
    std::size_t u_on = 0;
    for (auto i : full.on_indices) u_on += usage[i];
    const double r = std::sqrt(32.0 * pa / static_cast<double>(u_on));
    for (std::size_t i = 0; i < full.base_points.size(); ++i) {
      const bool on = std::find(full.on_indices.begin(), full.on_indices.end(), i) != full.on_indices.end();
      if (on)
        CHECK_THAT(std::abs(full.base_points[i]), WithinRel(r, 1e-12));
      else
        CHECK(std::abs(full.base_points[i]) == 0.0);
    }
    for (const Harvester& h : {Harvester{canonical_model()}, Harvester{LinearHarvester{0.3}},
                               Harvester{ModelC{0.02, 50.0, 10.0}}}) {
      const double want = static_cast<double>(u_on) / 32.0 * harvest(h, 32.0 * pa / static_cast<double>(u_on));
      CHECK_THAT(delivered_power_exact(full, h), WithinRel(want, 1e-9));
    }
  }
}

TEST_CASE("uniform usage reproduces the M_on radius", "[codebook]") {
  // Exhaustive n = 1 codebooks use every base point once.
  const auto cb = build_info_codebook(32, 1, 5.0);
  for (auto u : cb.usage()) CHECK(u == 1);
  const auto s = swipt_codebook(cb, 1.0, 5.0 / 317.0);
  CHECK(s.m_on == 1);
  CHECK_THAT(std::abs(s.base_points[s.on_indices[0]]), WithinRel(std::sqrt(160.0), 1e-12));
  CHECK_THAT(delivered_power_exact(s, canonical_model()), WithinRel(canonical_curve(160.0) / 32.0, 1e-9));
}

TEST_CASE("on-off block code construction", "[codebook]") {
  const auto c = onoff_block_code(4, 5.0, 0.25, 4);
  CHECK(c.n_on == 1);
  CHECK_THAT(c.r_on, WithinRel(2.0 * std::sqrt(5.0), 1e-14));
  CHECK(binomial(4, 1) == 4);
  CHECK_THROWS_AS(onoff_block_code(4, 5.0, 0.25, 5), CapacityError);
  try {
    onoff_block_code(4, 5.0, 0.25, 5);
  } catch (const CapacityError& e) {
    CHECK(e.bound() == 4);
  }

  const auto all = onoff_block_code(5, 3.0, 1.0, 1);
  CHECK(all.n_on == 5);
  CHECK_THAT(all.r_on, WithinRel(std::sqrt(3.0), 1e-14));
  CHECK_THROWS_AS(onoff_block_code(5, 3.0, 1.0, 2), CapacityError);

  CHECK_THAT(onoff_block_code(2, 5.0, 0.5, 2).r_on, WithinRel(std::sqrt(10.0), 1e-14));

  const auto six = onoff_block_code(6, 2.0, 0.4, 15);
  CHECK(six.n_on == 2);
  CHECK_THAT(six.n_on * six.r_on * six.r_on, WithinRel(6.0 * 2.0, 1e-12));
  std::set<std::vector<std::size_t>> distinct(six.support_sets.begin(), six.support_sets.end());
  CHECK(distinct.size() == 15);
  // Colexicographic order: {0,1}, {0,2}, {1,2}, {0,3}, ...
  CHECK(six.support_sets[0] == std::vector<std::size_t>{0, 1});
  CHECK(six.support_sets[1] == std::vector<std::size_t>{0, 2});
  CHECK(six.support_sets[2] == std::vector<std::size_t>{1, 2});
  CHECK(six.support_sets[3] == std::vector<std::size_t>{0, 3});
  CHECK_THAT(six.to_codebook().average_power(), WithinRel(2.0, 1e-12));

  for (std::size_t n : {4u, 7u, 10u})
    for (int k = 0; k <= 20; ++k) {
      const double p = std::min(1.0, 1.0 / n + (1.0 - 1.0 / n) * k / 20.0);
      const auto code = onoff_block_code(n, 1.0, p, 1);
      CHECK(std::abs(static_cast<double>(code.n_on) / n - p) <= 0.5 / n + 1e-12);
    }
}

TEST_CASE("on-off block decoding", "[codebook]") {
  const auto code = onoff_block_code(6, 2.0, 0.4, 15);
  for (std::size_t s = 0; s < code.m; ++s) CHECK(decode_onoff_block(code.codeword(s), code) == s);
  const std::vector<cplx> zeros(6);
  CHECK(decode_onoff_block(zeros, code) == 0);
  // The top-energy mask {4,5} is not a codeword; {0,2}, {1,2} and {2,3} tie on
  // overlap and the first of them wins.
  const auto small = onoff_block_code(6, 2.0, 0.4, 6);
  std::vector<cplx> y(6);
  y[5] = 3.0;
  y[4] = 2.0;
  y[2] = 1.0;
  CHECK(decode_onoff_block(y, small) == 1);
}

TEST_CASE("on-off block error rate matches the order-statistics formula", "[codebook]") {
  // One On position among n: an error occurs when an Off sample out-powers the
  // On sample, which gives the noncoherent orthogonal-signalling formula.
  const std::size_t n = 4;
  const auto code = onoff_block_code(n, 1.0, 0.25, 4);
  const double snr = 1.0;
  const auto spec = ChannelSpec::from_snr(snr, 1.0, 3);
  const double gamma = code.r_on * code.r_on / spec.sigma_sq;
  double pe = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    pe += sign * static_cast<double>(binomial(n - 1, k)) / (k + 1.0) * std::exp(-gamma * k / (k + 1.0));
  }
  const auto res = ser_mc(code.to_codebook(), spec, 2'000'000,
                          [&code](std::span<const cplx> y) { return decode_onoff_block(y, code); });
  CHECK(std::abs(res.ser - pe) <= 3.0 * std::sqrt(pe * (1.0 - pe) / 2e6));
}
