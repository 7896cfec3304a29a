#include <catch_amalgamated.hpp>

#include <cmath>

#include "swipt/channel.hpp"
#include "swipt/trainer.hpp"

using namespace swipt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TrainConfig small_cfg(double lambda, std::size_t n = 1) {
  TrainConfig cfg;
  cfg.lambda = lambda;
  cfg.n = n;
  cfg.hidden = {5};
  cfg.pd_floor = 1e-60;
  cfg.seed = 17;
  return cfg;
}

std::vector<Topology> small_topologies(double pa) {
  return {Topology::p2p(4, 20.0, pa), Topology::bc(2, 3, 30.0, 15.0, pa), Topology::mac(2, 3, 25.0, pa),
          Topology::ic(3, 2, 20.0, 40.0, 0.5, pa)};
}

void zero_output_layer(MlpParams& p, const std::vector<double>& bias) {
  const std::size_t l = p.layers.size() - 1;
  p.theta.segment(static_cast<Eigen::Index>(p.offsets[l]),
                  static_cast<Eigen::Index>(p.layers[l].in * p.layers[l].out + p.layers[l].out))
      .setZero();
  auto b = p.b_of(p.theta, l);
  for (std::size_t k = 0; k < bias.size(); ++k) b(static_cast<Eigen::Index>(k)) = bias[k];
}

}  // namespace

TEST_CASE("encoder normalization meets the power constraint", "[trainer]") {
  for (const auto& topo : small_topologies(7.0))
    for (std::size_t n : {1u, 2u}) {
      auto cfg = small_cfg(0.0, n);
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        cfg.seed = seed;
        const auto sys = make_system(topo, cfg);
        for (std::size_t t = 0; t < topo.n_tx(); ++t) {
          const auto x = encode_all(sys, t);
          CHECK(static_cast<std::size_t>(x.rows()) == topo.tx_rows(t));
          const double p = x.cwiseAbs2().sum() / static_cast<double>(x.size());
          CHECK_THAT(p, WithinRel(7.0, 1e-9));
        }
      }
    }
  const auto a = encode_all(make_system(Topology::p2p(4, 50.0, 1.0), small_cfg(0.0)));
  const auto b = encode_all(make_system(Topology::p2p(4, 50.0, 1.0), small_cfg(0.0)));
  CHECK(a == b);
}

TEST_CASE("unit-modulus raw outputs map to modulus sqrt(P_a)", "[trainer]") {
  auto sys = make_system(Topology::p2p(8, 50.0, 3.0), small_cfg(0.0));
  zero_output_layer(sys.encoders[0], {0.6, 0.8});
  const auto x = encode_all(sys);
  for (Eigen::Index r = 0; r < x.rows(); ++r) CHECK_THAT(std::abs(x(r, 0)), WithinRel(std::sqrt(3.0), 1e-14));
  zero_output_layer(sys.encoders[0], {0.0, 0.0});
  CHECK_THROWS_AS(encode_all(sys), NormalizationError);
}

TEST_CASE("loss terms", "[trainer]") {
  auto sys = make_system(Topology::p2p(8, 50.0, 3.0), small_cfg(0.0));
  Rng mr(1), nr(2);
  std::vector<std::vector<std::size_t>> msgs;
  std::vector<Eigen::MatrixXd> noise;
  draw_batch(sys, 64, mr, nr, msgs, noise);
  const auto l0 = composite_loss(sys, msgs, noise);
  CHECK(l0.power == 0.0);
  CHECK(l0.loss == l0.xent);

  zero_output_layer(sys.decoders[0], {});
  CHECK_THAT(composite_loss(sys, msgs, noise).xent, WithinRel(std::log(8.0), 1e-12));

  // Two heads on one receiver: ln M1 + ln M2.
  auto mac = make_system(Topology::mac(3, 5, 20.0, 2.0), small_cfg(0.0));
  zero_output_layer(mac.decoders[0], {});
  draw_batch(mac, 32, mr, nr, msgs, noise);
  CHECK_THAT(composite_loss(mac, msgs, noise).xent, WithinRel(std::log(3.0) + std::log(5.0), 1e-12));

  // A decoder with huge logits on the truth gives zero cross-entropy.
  auto sure = make_system(Topology::p2p(2, 1e12, 1.0), small_cfg(0.0));
  zero_output_layer(sure.encoders[0], {1.0, 0.0});
  draw_batch(sure, 16, mr, nr, msgs, noise);
  for (auto& s : msgs[0]) s = 0;
  zero_output_layer(sure.decoders[0], {800.0, 0.0});
  CHECK(composite_loss(sure, msgs, noise).xent == 0.0);

  auto lam = make_system(Topology::p2p(4, 50.0, 300.0), small_cfg(2.0));
  draw_batch(lam, 32, mr, nr, msgs, noise);
  const auto l1 = composite_loss(lam, msgs, noise);
  CHECK_THAT(l1.power, WithinRel(2.0 / l1.pd_mean[0], 1e-12));
  CHECK_THAT(l1.loss, WithinRel(l1.xent + l1.power, 1e-15));
}

TEST_CASE("analytic gradients match central differences on every topology", "[trainer][gradcheck]") {
  for (const auto& topo : small_topologies(300.0))
    for (double lambda : {0.0, 1.0})
      for (auto term : {PowerTerm::kBatchMean, PowerTerm::kPerSample}) {
        if (lambda == 0.0 && term == PowerTerm::kPerSample) continue;
        auto cfg = small_cfg(lambda);
        cfg.power_term = term;
        // Per-sample terms blow up on near-silent symbols of the canonical
        // curve, past what central differences resolve.
        const Harvester h = term == PowerTerm::kPerSample ? Harvester{LinearHarvester{1.0}} : canonical_model();
        const auto sys = make_system(topo, cfg, h);
        INFO(to_string(topo.kind) << " lambda=" << lambda << " params=" << sys.param_count());
        REQUIRE(sys.param_count() <= 200);
        const auto rep = gradient_check(sys, 24, 5);
        CHECK(rep.checked == sys.param_count());
        CHECK(rep.max_rel_error < 1e-4);
      }
  const auto sys = make_system(Topology::p2p(4, 20.0, 1.0), small_cfg(0.0));
  Rng mr(1), nr(2);
  std::vector<std::vector<std::size_t>> msgs;
  std::vector<Eigen::MatrixXd> noise;
  draw_batch(sys, 8, mr, nr, msgs, noise);
  CHECK(gradient_check(sys, msgs, noise, {}).max_rel_error == 0.0);
}

TEST_CASE("gradients with n = 2 and a fitted-style smooth harvester", "[trainer][gradcheck]") {
  auto cfg = small_cfg(1.0, 2);
  const auto sys = make_system(Topology::p2p(3, 20.0, 60.0), cfg, ModelC{0.02, 50.0, 10.0});
  CHECK(gradient_check(sys, 16, 9).max_rel_error < 1e-4);
}

TEST_CASE("multi-user channel composition", "[trainer]") {
  for (const auto& topo : {Topology::mac(3, 2, 20.0, 2.0), Topology::ic(3, 2, 20.0, 40.0, 0.5, 2.0)}) {
    const auto sys = make_system(topo, small_cfg(0.0));
    Rng mr(3), nr(4);
    std::vector<std::vector<std::size_t>> msgs;
    std::vector<Eigen::MatrixXd> noise;
    draw_batch(sys, 20, mr, nr, msgs, noise);
    std::vector<detail::EncodeTrace> enc;
    for (std::size_t t = 0; t < topo.n_tx(); ++t) enc.push_back(detail::encode_forward(sys, t));
    const auto x1 = encode_all(sys, 0), x2 = encode_all(sys, 1);
    for (std::size_t r = 0; r < topo.n_rx(); ++r) {
      const auto y = detail::received(sys, r, enc, msgs, noise[r]);
      const double sigma = std::sqrt(topo.pa / topo.snr[r] / 2.0);
      for (std::size_t l = 0; l < 20; ++l) {
        const cplx want = topo.gain(0, r) * x1(static_cast<Eigen::Index>(msgs[0][l]), 0) +
                          topo.gain(1, r) * x2(static_cast<Eigen::Index>(msgs[1][l]), 0) +
                          sigma * cplx{noise[r](0, static_cast<Eigen::Index>(l)), noise[r](1, static_cast<Eigen::Index>(l))};
        const auto li = static_cast<Eigen::Index>(l);
        CHECK_THAT(y(0, li), WithinAbs(want.real(), 1e-12));
        CHECK_THAT(y(1, li), WithinAbs(want.imag(), 1e-12));
      }
    }
  }
}

TEST_CASE("training is deterministic per seed", "[trainer]") {
  auto cfg = small_cfg(0.5);
  cfg.hidden = {16};
  cfg.iterations = 60;
  auto a = make_system(Topology::bc(2, 2, 100.0, 50.0, 300.0), cfg);
  auto b = a;
  const auto ta = train(a);
  const auto tb = train(b);
  REQUIRE(ta.size() == 60);
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].loss == tb[i].loss);
  CHECK(a.flat_params() == b.flat_params());
}

TEST_CASE("divergence surfaces as a training error with the iteration", "[trainer]") {
  auto cfg = small_cfg(0.0);
  cfg.learning_rate = 1e300;
  cfg.iterations = 50;
  auto sys = make_system(Topology::p2p(4, 50.0, 1.0), cfg);
  LossTrace trace;
  CHECK_THROWS_AS(train(sys, trace), TrainingError);
  CHECK_FALSE(trace.empty());
}

TEST_CASE("P2P M = 4 reaches 4-QAM quality", "[trainer][slow]") {
  TrainConfig cfg;
  cfg.iterations = 2000;
  cfg.seed = 1;
  auto sys = make_system(Topology::p2p(4, 50.0, 1.0), cfg);
  const auto trace = train(sys);

  const auto design = extract_design(sys);
  REQUIRE(design.size() == 1);
  CHECK(!design[0].rho.has_value());
  CHECK_THAT(design[0].average_power(), WithinRel(1.0, 1e-9));

  const std::size_t trials = 200000;
  const auto ev = evaluate_system(sys, trials, 3);
  const double p = ser_square_qam(4, 50.0);
  CHECK(ev.ser[0] <= 2.0 * p + binomial_halfwidth(2.0 * p, trials));
  const auto ml = ser_mc(design[0], ChannelSpec::from_snr(50.0, 1.0, 3), trials);
  CHECK(ml.ser <= 2.0 * p + binomial_halfwidth(2.0 * p, trials));

  // 100-iteration moving average over the second half, compared window to window.
  std::vector<double> avg;
  for (std::size_t w = trace.size() / 2; w + 100 <= trace.size(); w += 100) {
    double s = 0.0;
    for (std::size_t i = w; i < w + 100; ++i) s += trace[i].loss;
    avg.push_back(s / 100.0);
  }
  std::size_t violations = 0;
  for (std::size_t i = 1; i < avg.size(); ++i) violations += avg[i] > avg[i - 1] * 1.05;
  CHECK(violations <= avg.size() / 20 + 1);
}

TEST_CASE("extracted design SER matches in-training evaluation", "[trainer][slow]") {
  TrainConfig cfg;
  cfg.iterations = 800;
  cfg.hidden = {32, 32};
  auto sys = make_system(Topology::p2p(16, 20.0, 2.0), cfg);
  train(sys);
  const std::size_t trials = 200000;
  const auto ev = evaluate_system(sys, trials, 8);
  const auto design = extract_design(sys);
  const auto learned = ser_mc(design[0], ChannelSpec::from_snr(20.0, 2.0, 8), trials, LearnedDecoder(sys, 0));
  const double tol = binomial_halfwidth(ev.ser[0], trials) + binomial_halfwidth(learned.ser, trials);
  CHECK(std::abs(learned.ser - ev.ser[0]) <= tol);
  const auto c = to_constellation(design[0]);
  CHECK(c.points.size() == 16);
  CHECK_THAT(c.average_power(), WithinRel(2.0, 1e-9));
}

TEST_CASE("lambda endpoint moves one of 32 points outward", "[trainer][slow]") {
  TrainConfig cfg;
  cfg.lambda = 1.0;
  cfg.pd_floor = 1e-60;
  cfg.iterations = 20000;
  cfg.learning_rate = 3e-3;
  cfg.seed = 1;
  auto sys = make_system(Topology::p2p(32, 50.0, 5.0), cfg);
  train(sys);
  const auto c = to_constellation(extract_design(sys)[0]);
  CHECK_THAT(c.average_power(), WithinRel(5.0, 1e-9));
  std::size_t outer = 0;
  for (auto z : c.points) outer += std::abs(z) > std::sqrt(32.0 * 5.0) / 2.0;
  CHECK(outer == 1);
}

TEST_CASE("extracted shapes per topology", "[trainer]") {
  auto cfg = small_cfg(0.0, 2);
  const auto p2p = extract_design(make_system(Topology::p2p(16, 50.0, 1.0), cfg));
  CHECK(p2p[0].m == 16);
  CHECK(p2p[0].n == 2);
  CHECK_THROWS_AS(to_constellation(p2p[0]), DomainError);
  const auto bc = extract_design(make_system(Topology::bc(4, 2, 100.0, 50.0, 1.0), small_cfg(0.0)));
  REQUIRE(bc.size() == 1);
  CHECK(bc[0].m == 8);
  const auto ic = extract_design(make_system(Topology::ic(4, 2, 10.0, 10.0, 0.5, 1.0), small_cfg(0.0)));
  REQUIRE(ic.size() == 2);
  CHECK(ic[1].m == 2);
}

TEST_CASE("topology and config validation", "[trainer]") {
  CHECK_THROWS_AS(make_system(Topology{TopologyKind::kBC, {4}, {1.0}, {{1.0}}, 1.0}, TrainConfig{}), DomainError);
  auto ic = Topology::ic(2, 2, 1.0, 1.0, 0.5, 1.0);
  ic.gains[0][0] = 0.9;
  CHECK_THROWS_AS(make_system(ic, TrainConfig{}), DomainError);
  TrainConfig bad;
  bad.pd_floor = 0.0;
  CHECK_THROWS_AS(make_system(Topology::p2p(4, 1.0, 1.0), bad), DomainError);
  bad = TrainConfig{};
  bad.batch_size = 0;
  CHECK_THROWS_AS(make_system(Topology::p2p(4, 1.0, 1.0), bad), DomainError);
  CHECK(topology_from_string("ic") == TopologyKind::kIC);
  CHECK_THROWS_AS(topology_from_string("mesh"), DomainError);
}
