#include <catch_amalgamated.hpp>

#include <cmath>

#include "swipt/channel.hpp"
#include "swipt/codebook.hpp"

using namespace swipt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Codebook antipodal(double pa) { return Codebook::from_symbols(2, 1, pa, {cplx{std::sqrt(pa), 0}, cplx{-std::sqrt(pa), 0}}); }

// ML error probability of a 1-D symbol set by trapezoidal integration of the
// real-axis Gaussian over the wrong decision regions.
double ser_1d_integral(const std::vector<double>& x, double sigma_sq) {
  const double s = std::sqrt(sigma_sq / 2.0);
  double pe = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lo = x[k] - 12 * s, hi = x[k] + 12 * s;
    const int steps = 200000;
    const double h = (hi - lo) / steps;
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double y = lo + i * h;
      std::size_t best = 0;
      for (std::size_t j = 1; j < x.size(); ++j)
        if (std::abs(y - x[j]) < std::abs(y - x[best])) best = j;
      if (best == k) continue;
      const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
      acc += w * std::exp(-(y - x[k]) * (y - x[k]) / (2 * s * s)) / (s * std::sqrt(kTwoPi));
    }
    pe += acc * h;
  }
  return pe / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("noise variance matches the SNR convention", "[channel]") {
  const auto spec = ChannelSpec::from_snr(4.0, 2.0, 1);
  CHECK(spec.sigma_sq == 0.5);
  Rng rng(3);
  std::vector<cplx> x(400000);
  awgn_inplace(x, spec.sigma_sq, rng);
  double re = 0.0, im = 0.0;
  for (auto z : x) {
    re += z.real() * z.real();
    im += z.imag() * z.imag();
  }
  CHECK_THAT((re + im) / x.size(), WithinRel(0.5, 0.01));
  CHECK_THAT(re / x.size(), WithinRel(0.25, 0.01));
  CHECK_THROWS_AS(ChannelSpec::from_snr(0.0, 1.0, 1), DomainError);
}

TEST_CASE("huge SNR gives zero errors", "[channel]") {
  const auto c = layout_info(16, 5.0);
  const auto r = ser_mc(c, ChannelSpec::from_snr(1e9, 5.0, 1), 20000);
  CHECK(r.ser == 0.0);
  CHECK(r.errors == 0);
}

TEST_CASE("analytic oracles", "[channel]") {
  const std::size_t trials = 400000;
  {
    const double snr = 4.0;
    const auto r = ser_mc(antipodal(2.0), ChannelSpec::from_snr(snr, 2.0, 5), trials);
    const double p = ser_antipodal(snr);
    CHECK(std::abs(r.ser - p) <= binomial_halfwidth(p, trials));
  }
  {
    const double snr = 50.0;
    const auto r = ser_mc(qam_reference(4, 3.0), ChannelSpec::from_snr(snr, 3.0, 6), trials);
    const double q = q_function(std::sqrt(snr));
    const double p = 1.0 - (1.0 - q) * (1.0 - q);
    CHECK(std::abs(r.ser - p) <= std::max(binomial_halfwidth(p, trials), 3.0 / trials));
  }
  {
    const double snr = 30.0;
    const auto r = ser_mc(qam_reference(16, 1.0), ChannelSpec::from_snr(snr, 1.0, 7), trials);
    const double p = ser_square_qam(16, snr);
    CHECK(std::abs(r.ser - p) <= binomial_halfwidth(p, trials));
  }
}

TEST_CASE("ML decoding agrees with numerical integration for small 1-D sets", "[channel]") {
  const std::vector<std::vector<double>> sets{{-1.0, 1.0}, {0.0, 1.5}, {-2.0, 0.0, 1.0}, {-3.0, -1.0, 1.0, 3.0}};
  for (const auto& x : sets) {
    std::vector<cplx> pts;
    for (double v : x) pts.emplace_back(v, 0.0);
    const double pa = mean_power(pts);
    const auto cb = Codebook::from_symbols(x.size(), 1, pa, pts);
    const double sigma_sq = 0.8;
    const ChannelSpec spec{pa / sigma_sq, sigma_sq, 11};
    const std::size_t trials = 300000;
    const auto r = ser_mc(cb, spec, trials);
    const double p = ser_1d_integral(x, sigma_sq);
    CHECK(std::abs(r.ser - p) <= binomial_halfwidth(p, trials));
  }
}

TEST_CASE("QAM references", "[channel]") {
  for (std::size_t m : {4u, 16u, 64u}) {
    const auto q = qam_reference(m, 5.0);
    CHECK(q.points.size() == m);
    CHECK_THAT(q.average_power(), WithinRel(5.0, 1e-12));
  }
  const auto c16 = as_codebook(qam_reference(16, 5.0));
  CHECK_THAT(codebook_min_dist(c16), WithinRel(4.0 * 5.0 / 10.0, 1e-12));
  CHECK_THROWS_AS(qam_reference(8, 1.0), DomainError);
}

TEST_CASE("delivered power", "[channel]") {
  const auto c = swipt_transform(layout_info(32, 120.0), 1.0, 120.0 / 317.0);
  const Harvester h = canonical_model();
  const double want = 12.0 / 32.0 * canonical_curve(32.0 * 120.0 / 12.0);
  CHECK_THAT(delivered_power_exact(c, h), WithinRel(want, 1e-12));
  const auto mc = delivered_power_mc(c, ChannelSpec::noiseless(4), h, 200000);
  CHECK(std::abs(mc.mean_uw - want) <= mc.ci_halfwidth + 1e-12);
  const Harvester lin = LinearHarvester{1.0};
  const auto spec = ChannelSpec::from_snr(10.0, 120.0, 9);
  const auto noisy = delivered_power_mc(c, spec, lin, 200000);
  CHECK(std::abs(noisy.mean_uw - (120.0 + spec.sigma_sq)) <= noisy.ci_halfwidth);
}

TEST_CASE("degenerate designs", "[channel]") {
  const auto cb = Codebook::from_symbols(4, 1, 1.0, {cplx{1, 0}, cplx{1, 0}, cplx{1, 0}, cplx{1, 0}});
  const auto r = ser_mc(cb, ChannelSpec::from_snr(10.0, 1.0, 1), 1000);
  CHECK(r.degenerate);
  CHECK(r.ser == 0.75);
  CHECK_THROWS_AS(ser_mc(cb, ChannelSpec::from_snr(10.0, 1.0, 1), 999), DomainError);
}

TEST_CASE("rate-power sweep", "[channel]") {
  const double pa = 120.0;
  const auto base = layout_info(16, pa);
  auto designer = [&](double rho) { return swipt_transform(base, rho, pa / 317.0); };
  const auto rows = rp_sweep(designer, {1.0, 0.0, 0.5, 0.25, 0.75}, ChannelSpec::from_snr(50.0, pa, 2),
                             canonical_model(), 20000);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].control > rows[i - 1].control);
    CHECK(rows[i].pd_uw >= rows[i - 1].pd_uw);
  }
  CHECK(rows.back().ser >= rows.front().ser);
  CHECK_THROWS_AS(rp_sweep(designer, {}, ChannelSpec::from_snr(50.0, pa, 2), canonical_model(), 20000),
                  DomainError);
}

TEST_CASE("Monte Carlo is reproducible per seed", "[channel]") {
  const auto c = layout_info(16, 5.0);
  const auto a = ser_mc(c, ChannelSpec::from_snr(10.0, 5.0, 42), 70000);
  const auto b = ser_mc(c, ChannelSpec::from_snr(10.0, 5.0, 42), 70000);
  CHECK(a.errors == b.errors);
}
