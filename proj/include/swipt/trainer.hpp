#pragma once

// End-to-end learned (coded) modulation for point-to-point, broadcast,
// multiple-access and interference topologies.
//
// Each transmitter maps a one-hot message (concatenated one-hots when it
// serves several users) to n complex symbols; each receiver decodes its
// users' messages with a softmax head per user and feeds the same received
// samples to the harvester.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swipt/channel.hpp"
#include "swipt/codebook.hpp"
#include "swipt/constellation.hpp"
#include "swipt/eh_model.hpp"
#include "swipt/errors.hpp"
#include "swipt/mlp.hpp"
#include "swipt/numeric.hpp"
#include "swipt/rng.hpp"

namespace swipt {

enum class TopologyKind { kP2P, kBC, kMAC, kIC };

inline const char* to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::kP2P: return "p2p";
    case TopologyKind::kBC: return "bc";
    case TopologyKind::kMAC: return "mac";
    case TopologyKind::kIC: return "ic";
  }
  return "?";
}

inline TopologyKind topology_from_string(const std::string& s) {
  if (s == "p2p") return TopologyKind::kP2P;
  if (s == "bc") return TopologyKind::kBC;
  if (s == "mac") return TopologyKind::kMAC;
  if (s == "ic") return TopologyKind::kIC;
  throw DomainError("unknown topology '" + s + "'");
}

struct Topology {
  TopologyKind kind = TopologyKind::kP2P;
  std::vector<std::size_t> m{4};  // message-set size per user
  std::vector<double> snr{50.0};  // per receiver
  // gains[d][j]: amplitude gain from transmitter d to receiver j (IC only).
  std::vector<std::vector<double>> gains{{1.0}};
  double pa = 1.0;  // per-transmitter average power, µW

  std::size_t k() const { return m.size(); }

  std::size_t n_tx() const {
    return (kind == TopologyKind::kP2P || kind == TopologyKind::kBC) ? 1 : k();
  }
  std::size_t n_rx() const {
    return (kind == TopologyKind::kP2P || kind == TopologyKind::kMAC) ? 1 : k();
  }

  std::vector<std::size_t> tx_users(std::size_t t) const {
    if (kind == TopologyKind::kBC) {
      std::vector<std::size_t> u(k());
      std::iota(u.begin(), u.end(), std::size_t{0});
      return u;
    }
    return {t};
  }
  std::vector<std::size_t> rx_users(std::size_t r) const {
    if (kind == TopologyKind::kMAC) {
      std::vector<std::size_t> u(k());
      std::iota(u.begin(), u.end(), std::size_t{0});
      return u;
    }
    return {r};
  }

  double gain(std::size_t tx, std::size_t rx) const {
    return kind == TopologyKind::kIC ? gains[tx][rx] : 1.0;
  }

  // Number of distinct inputs of transmitter t.
  std::size_t tx_rows(std::size_t t) const {
    std::size_t r = 1;
    for (auto u : tx_users(t)) r *= m[u];
    return r;
  }

  void validate() const {
    if (m.empty()) throw DomainError("Topology: no users");
    if ((k() == 1) != (kind == TopologyKind::kP2P)) throw DomainError("Topology: K = 1 iff point-to-point");
    for (auto mj : m)
      if (mj < 2) throw DomainError("Topology: message sets need M >= 2");
    if (snr.size() != n_rx()) throw DomainError("Topology: one SNR per receiver required");
    for (double s : snr)
      if (!(s > 0.0)) throw DomainError("Topology: SNRs must be > 0");
    if (!(pa > 0.0) || !std::isfinite(pa)) throw DomainError("Topology: P_a must be > 0");
    if (kind == TopologyKind::kIC) {
      if (gains.size() != k()) throw DomainError("Topology: gains must be K x K");
      for (std::size_t d = 0; d < k(); ++d) {
        if (gains[d].size() != k()) throw DomainError("Topology: gains must be K x K");
        if (gains[d][d] != 1.0) throw DomainError("Topology: gains need a unit diagonal");
      }
    }
  }

  static Topology p2p(std::size_t m, double snr, double pa) {
    return {TopologyKind::kP2P, {m}, {snr}, {{1.0}}, pa};
  }
  static Topology bc(std::size_t m1, std::size_t m2, double snr1, double snr2, double pa) {
    return {TopologyKind::kBC, {m1, m2}, {snr1, snr2}, {{1.0, 1.0}, {1.0, 1.0}}, pa};
  }
  static Topology mac(std::size_t m1, std::size_t m2, double snr, double pa) {
    return {TopologyKind::kMAC, {m1, m2}, {snr}, {{1.0, 1.0}, {1.0, 1.0}}, pa};
  }
  static Topology ic(std::size_t m1, std::size_t m2, double snr1, double snr2, double cross, double pa) {
    return {TopologyKind::kIC, {m1, m2}, {snr1, snr2}, {{1.0, cross}, {cross, 1.0}}, pa};
  }
};

enum class PowerTerm {
  kBatchMean,  // lambda / max(mean_l P_d(l), floor) per receiver
  kPerSample,  // mean_l lambda / max(P_d(l), floor) per receiver
};

struct TrainConfig {
  double lambda = 0.0;
  std::size_t n = 1;
  double learning_rate = 1e-3;
  // Learning rate at the last iteration as a fraction of learning_rate;
  // the rate decays geometrically in between. 1 keeps it constant.
  double lr_final_ratio = 1.0;
  std::size_t batch_size = 256;
  std::size_t iterations = 2000;
  std::uint64_t seed = 1;
  double pd_floor = 1e-3;  // µW
  PowerTerm power_term = PowerTerm::kBatchMean;
  std::vector<std::size_t> hidden{64, 64};

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("TrainConfig: lambda must be >= 0");
    if (n == 0) throw DomainError("TrainConfig: n must be >= 1");
    if (!(learning_rate > 0.0)) throw DomainError("TrainConfig: learning rate must be > 0");
    if (!(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0))
      throw DomainError("TrainConfig: lr_final_ratio must lie in (0, 1]");
    if (batch_size == 0) throw DomainError("TrainConfig: batch size must be >= 1");
    if (!(pd_floor > 0.0)) throw DomainError("TrainConfig: pd_floor must be > 0");
    if (hidden.empty()) throw DomainError("TrainConfig: at least one hidden layer");
    for (auto h : hidden)
      if (h == 0) throw DomainError("TrainConfig: hidden widths must be >= 1");
  }
};

struct AeSystem {
  Topology topo;
  TrainConfig cfg;
  Harvester harvester = canonical_model();
  std::vector<MlpParams> encoders;
  std::vector<MlpParams> decoders;
  std::optional<double> final_loss;

  std::size_t param_count() const {
    std::size_t c = 0;
    for (const auto& e : encoders) c += e.size();
    for (const auto& d : decoders) c += d.size();
    return c;
  }

  Eigen::VectorXd flat_params() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(param_count()));
    Eigen::Index off = 0;
    for (const auto* net : networks()) {
      v.segment(off, net->theta.size()) = net->theta;
      off += net->theta.size();
    }
    return v;
  }

  void set_flat_params(const Eigen::VectorXd& v) {
    if (static_cast<std::size_t>(v.size()) != param_count())
      throw DomainError("AeSystem: parameter vector size mismatch");
    Eigen::Index off = 0;
    for (auto* net : networks()) {
      net->theta = v.segment(off, net->theta.size());
      off += net->theta.size();
    }
  }

  std::vector<const MlpParams*> networks() const {
    std::vector<const MlpParams*> out;
    for (const auto& e : encoders) out.push_back(&e);
    for (const auto& d : decoders) out.push_back(&d);
    return out;
  }
  std::vector<MlpParams*> networks() {
    std::vector<MlpParams*> out;
    for (auto& e : encoders) out.push_back(&e);
    for (auto& d : decoders) out.push_back(&d);
    return out;
  }
};

// Builds the networks of a topology with seeded initialization.
inline AeSystem make_system(const Topology& topo, const TrainConfig& cfg,
                            const Harvester& harvester = canonical_model()) {
  topo.validate();
  cfg.validate();
  AeSystem sys;
  sys.topo = topo;
  sys.cfg = cfg;
  sys.harvester = harvester;
  const std::size_t two_n = 2 * cfg.n;

  auto build = [&](std::size_t in, std::size_t out, Activation out_act, std::vector<std::size_t> heads) {
    std::vector<LayerShape> shapes;
    std::size_t prev = in;
    for (auto h : cfg.hidden) {
      shapes.push_back({prev, h, Activation::kTanh});
      prev = h;
    }
    shapes.push_back({prev, out, out_act});
    return MlpParams(std::move(shapes), std::move(heads));
  };

  for (std::size_t t = 0; t < topo.n_tx(); ++t) {
    std::size_t in = 0;
    for (auto u : topo.tx_users(t)) in += topo.m[u];
    sys.encoders.push_back(build(in, two_n, Activation::kIdentity, {}));
  }
  for (std::size_t r = 0; r < topo.n_rx(); ++r) {
    std::vector<std::size_t> heads;
    for (auto u : topo.rx_users(r)) heads.push_back(topo.m[u]);
    const std::size_t out = std::accumulate(heads.begin(), heads.end(), std::size_t{0});
    sys.decoders.push_back(build(two_n, out, Activation::kSoftmax, heads));
  }

  Rng init = Rng(cfg.seed).split(Stream::kInit);
  for (auto* net : sys.networks()) xavier_init(*net, init);
  return sys;
}

namespace detail {

// One-hot (or concatenated one-hot) inputs for every row of transmitter t.
inline Eigen::MatrixXd encoder_inputs(const Topology& topo, std::size_t t) {
  const auto users = topo.tx_users(t);
  std::size_t in = 0;
  for (auto u : users) in += topo.m[u];
  const std::size_t rows = topo.tx_rows(t);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    // Mixed radix, first user most significant.
    std::size_t rem = r;
    std::size_t base = in;
    for (std::size_t k = users.size(); k-- > 0;) {
      const std::size_t mu = topo.m[users[k]];
      base -= mu;
      x(static_cast<Eigen::Index>(base + rem % mu), static_cast<Eigen::Index>(r)) = 1.0;
      rem /= mu;
    }
  }
  return x;
}

inline std::size_t tx_row(const Topology& topo, std::size_t t,
                          const std::vector<std::vector<std::size_t>>& msgs, std::size_t l) {
  std::size_t r = 0;
  for (auto u : topo.tx_users(t)) r = r * topo.m[u] + msgs[u][l];
  return r;
}

struct EncodeTrace {
  MlpCache cache;
  Eigen::MatrixXd raw;  // 2n x rows, before normalization
  Eigen::MatrixXd x;    // normalized
  double c = 1.0;
  double s = 0.0;
};

inline EncodeTrace encode_forward(const AeSystem& sys, std::size_t t) {
  EncodeTrace tr;
  tr.raw = mlp_forward(sys.encoders[t], encoder_inputs(sys.topo, t), &tr.cache);
  tr.s = tr.raw.squaredNorm();
  if (!(tr.s > 0.0) || !std::isfinite(tr.s))
    throw NormalizationError("encode_all: raw encoder outputs are all zero or non-finite");
  const double rows = static_cast<double>(tr.raw.cols());
  tr.c = std::sqrt(rows * static_cast<double>(sys.cfg.n) * sys.topo.pa / tr.s);
  tr.x = tr.c * tr.raw;
  return tr;
}

// Gradient through x = c(raw) * raw with c = sqrt(K / |raw|^2).
inline Eigen::MatrixXd normalization_backward(const EncodeTrace& tr, const Eigen::MatrixXd& dx) {
  const double dot = (dx.array() * tr.raw.array()).sum();
  return tr.c * dx - (tr.c / tr.s) * dot * tr.raw;
}

inline Eigen::MatrixXd received(const AeSystem& sys, std::size_t r, const std::vector<EncodeTrace>& enc,
                                const std::vector<std::vector<std::size_t>>& msgs,
                                const Eigen::MatrixXd& noise) {
  const auto& topo = sys.topo;
  const Eigen::Index b = noise.cols();
  const double sigma = std::sqrt(topo.pa / topo.snr[r] / 2.0);
  Eigen::MatrixXd y = sigma * noise;
  for (std::size_t t = 0; t < topo.n_tx(); ++t) {
    const double g = topo.gain(t, r);
    if (g == 0.0) continue;
    for (Eigen::Index l = 0; l < b; ++l)
      y.col(l) += g * enc[t].x.col(static_cast<Eigen::Index>(tx_row(topo, t, msgs, static_cast<std::size_t>(l))));
  }
  return y;
}

}  // namespace detail

// Normalized symbols of every input of transmitter t: rows x n complex.
inline Eigen::MatrixXcd encode_all(const AeSystem& sys, std::size_t t = 0) {
  const auto tr = detail::encode_forward(sys, t);
  const auto rows = tr.x.cols();
  const auto n = static_cast<Eigen::Index>(sys.cfg.n);
  Eigen::MatrixXcd out(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index i = 0; i < n; ++i) out(r, i) = cplx{tr.x(2 * i, r), tr.x(2 * i + 1, r)};
  return out;
}

struct LossResult {
  double loss = 0.0;
  double xent = 0.0;
  double power = 0.0;
  std::vector<double> pd_mean;  // per receiver, µW per symbol
  Eigen::VectorXd grad;         // laid out like AeSystem::flat_params
};

// messages[u][l]: message of user u in batch sample l.
// noise[r]: 2n x B standard normal draws for receiver r (scaled internally).
inline LossResult composite_loss(const AeSystem& sys, const std::vector<std::vector<std::size_t>>& messages,
                                 const std::vector<Eigen::MatrixXd>& noise, std::size_t iteration = 0) {
  const auto& topo = sys.topo;
  const auto& cfg = sys.cfg;
  if (messages.size() != topo.k()) throw DomainError("composite_loss: one message row per user");
  const std::size_t bsz = messages[0].size();
  if (bsz == 0) throw DomainError("composite_loss: empty batch");
  if (noise.size() != topo.n_rx()) throw DomainError("composite_loss: one noise block per receiver");
  const auto two_n = static_cast<Eigen::Index>(2 * cfg.n);
  const auto b = static_cast<Eigen::Index>(bsz);
  const double inv_b = 1.0 / static_cast<double>(bsz);
  const double in_scale = 1.0 / std::sqrt(topo.pa);

  std::vector<detail::EncodeTrace> enc;
  for (std::size_t t = 0; t < topo.n_tx(); ++t) enc.push_back(detail::encode_forward(sys, t));

  LossResult res;
  res.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.param_count()));
  std::vector<Eigen::MatrixXd> dx(topo.n_tx());
  for (std::size_t t = 0; t < topo.n_tx(); ++t) dx[t] = Eigen::MatrixXd::Zero(two_n, enc[t].x.cols());

  // Offsets of each network inside the flat gradient.
  std::vector<Eigen::Index> off;
  {
    Eigen::Index o = 0;
    for (const auto* net : sys.networks()) {
      off.push_back(o);
      o += net->theta.size();
    }
  }
  const std::size_t dec_base = topo.n_tx();

  CompensatedSum xent, power;
  for (std::size_t r = 0; r < topo.n_rx(); ++r) {
    if (noise[r].rows() != two_n || noise[r].cols() != b)
      throw DomainError("composite_loss: noise block must be 2n x B");
    const Eigen::MatrixXd y = detail::received(sys, r, enc, messages, noise[r]);
    const auto& dec = sys.decoders[r];
    MlpCache cache;
    Eigen::MatrixXd probs = mlp_forward(dec, y * in_scale, &cache);

    // Cross-entropy per head; gradient w.r.t. logits is (p - onehot) / B.
    Eigen::MatrixXd dlogits = probs * inv_b;
    const auto users = topo.rx_users(r);
    Eigen::Index row = 0;
    for (std::size_t h = 0; h < users.size(); ++h) {
      const auto u = users[h];
      for (Eigen::Index l = 0; l < b; ++l) {
        const auto idx = row + static_cast<Eigen::Index>(messages[u][static_cast<std::size_t>(l)]);
        xent += -std::log(std::max(probs(idx, l), std::numeric_limits<double>::min())) * inv_b;
        dlogits(idx, l) -= inv_b;
      }
      row += static_cast<Eigen::Index>(topo.m[u]);
    }

    Eigen::VectorXd g_dec = Eigen::VectorXd::Zero(dec.theta.size());
    Eigen::MatrixXd dy = mlp_backward(dec, cache, dlogits, g_dec) * in_scale;
    res.grad.segment(off[dec_base + r], dec.theta.size()) += g_dec;

    // Harvested power per sample: mean over the n symbols.
    Eigen::VectorXd pd(b);
    Eigen::MatrixXd slope(cfg.n, b);
    for (Eigen::Index l = 0; l < b; ++l) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(cfg.n); ++i) {
        const double p_in = y(2 * i, l) * y(2 * i, l) + y(2 * i + 1, l) * y(2 * i + 1, l);
        const auto [v, s] = harvest_with_slope(sys.harvester, p_in);
        acc += v;
        slope(i, l) = s;
      }
      pd(l) = acc / static_cast<double>(cfg.n);
    }
    CompensatedSum pd_sum;
    for (Eigen::Index l = 0; l < b; ++l) pd_sum += pd(l);
    const double pd_mean = pd_sum.value() * inv_b;
    res.pd_mean.push_back(pd_mean);

    if (cfg.lambda > 0.0) {
      // coef(l): d(power term)/d(pd(l)).
      Eigen::VectorXd coef = Eigen::VectorXd::Zero(b);
      if (cfg.power_term == PowerTerm::kBatchMean) {
        const double den = std::max(pd_mean, cfg.pd_floor);
        power += cfg.lambda / den;
        if (pd_mean > cfg.pd_floor) coef.setConstant(-cfg.lambda / (den * den) * inv_b);
      } else {
        for (Eigen::Index l = 0; l < b; ++l) {
          const double den = std::max(pd(l), cfg.pd_floor);
          power += cfg.lambda / den * inv_b;
          if (pd(l) > cfg.pd_floor) coef(l) = -cfg.lambda / (den * den) * inv_b;
        }
      }
      const double inv_n = 1.0 / static_cast<double>(cfg.n);
      for (Eigen::Index l = 0; l < b; ++l) {
        if (coef(l) == 0.0) continue;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(cfg.n); ++i) {
          const double k = coef(l) * inv_n * slope(i, l) * 2.0;
          dy(2 * i, l) += k * y(2 * i, l);
          dy(2 * i + 1, l) += k * y(2 * i + 1, l);
        }
      }
    }

    for (std::size_t t = 0; t < topo.n_tx(); ++t) {
      const double g = topo.gain(t, r);
      if (g == 0.0) continue;
      for (Eigen::Index l = 0; l < b; ++l)
        dx[t].col(static_cast<Eigen::Index>(detail::tx_row(topo, t, messages, static_cast<std::size_t>(l)))) +=
            g * dy.col(l);
    }
  }

  for (std::size_t t = 0; t < topo.n_tx(); ++t) {
    const auto& e = sys.encoders[t];
    Eigen::VectorXd g_enc = Eigen::VectorXd::Zero(e.theta.size());
    mlp_backward(e, enc[t].cache, detail::normalization_backward(enc[t], dx[t]), g_enc);
    res.grad.segment(off[t], e.theta.size()) += g_enc;
  }

  res.xent = xent.value();
  res.power = power.value();
  res.loss = res.xent + res.power;
  if (!std::isfinite(res.loss) || !res.grad.allFinite())
    throw TrainingError("composite_loss: non-finite loss or gradient", iteration);
  return res;
}

// Draws one batch: uniform messages per user and standard normal noise per receiver.
inline void draw_batch(const AeSystem& sys, std::size_t bsz, Rng& msg_rng, Rng& noise_rng,
                       std::vector<std::vector<std::size_t>>& messages, std::vector<Eigen::MatrixXd>& noise) {
  const auto& topo = sys.topo;
  messages.assign(topo.k(), std::vector<std::size_t>(bsz));
  for (std::size_t u = 0; u < topo.k(); ++u)
    for (auto& s : messages[u]) s = msg_rng.below(topo.m[u]);
  noise.resize(topo.n_rx());
  const auto two_n = static_cast<Eigen::Index>(2 * sys.cfg.n);
  for (auto& w : noise) {
    w.resize(two_n, static_cast<Eigen::Index>(bsz));
    for (Eigen::Index l = 0; l < w.cols(); ++l)
      for (Eigen::Index i = 0; i < two_n; ++i) w(i, l) = noise_rng.normal();
  }
}

struct TraceRow {
  std::size_t iteration = 0;
  double loss = 0.0;
  double xent = 0.0;
  double power = 0.0;
};

using LossTrace = std::vector<TraceRow>;

// Adam on all networks for cfg.iterations steps. The trace is appended as
// training proceeds, so it survives a divergence exception.
inline void train(AeSystem& sys, LossTrace& trace) {
  sys.topo.validate();
  sys.cfg.validate();
  const Rng root(sys.cfg.seed);
  Rng msg_rng = root.split(Stream::kMessages);
  Rng noise_rng = root.split(Stream::kNoise);
  std::vector<Adam> opt;
  for (std::size_t k = 0; k < sys.networks().size(); ++k) opt.emplace_back(sys.cfg.learning_rate);

  std::vector<std::vector<std::size_t>> messages;
  std::vector<Eigen::MatrixXd> noise;
  trace.reserve(trace.size() + sys.cfg.iterations);
  for (std::size_t it = 0; it < sys.cfg.iterations; ++it) {
    draw_batch(sys, sys.cfg.batch_size, msg_rng, noise_rng, messages, noise);
    if (sys.cfg.lr_final_ratio != 1.0 && sys.cfg.iterations > 1) {
      const double frac = static_cast<double>(it) / static_cast<double>(sys.cfg.iterations - 1);
      for (auto& o : opt) o.set_learning_rate(sys.cfg.learning_rate * std::pow(sys.cfg.lr_final_ratio, frac));
    }
    LossResult res;
    try {
      res = composite_loss(sys, messages, noise, it);
    } catch (const NormalizationError& e) {
      throw TrainingError(e.what(), it);
    }
    trace.push_back({it, res.loss, res.xent, res.power});
    Eigen::Index off = 0;
    auto nets = sys.networks();
    for (std::size_t k = 0; k < nets.size(); ++k) {
      const auto sz = nets[k]->theta.size();
      opt[k].step(nets[k]->theta, res.grad.segment(off, sz));
      off += sz;
    }
    sys.final_loss = res.loss;
  }
}

inline LossTrace train(AeSystem& sys) {
  LossTrace trace;
  train(sys, trace);
  return trace;
}

// Learned designs in the codebook format (rho unset marks them as learned).
inline std::vector<Codebook> extract_design(const AeSystem& sys) {
  std::vector<Codebook> out;
  for (std::size_t t = 0; t < sys.topo.n_tx(); ++t) {
    const auto x = encode_all(sys, t);
    std::vector<cplx> syms;
    syms.reserve(static_cast<std::size_t>(x.size()));
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index i = 0; i < x.cols(); ++i) syms.push_back(x(r, i));
    auto cb = Codebook::from_symbols(static_cast<std::size_t>(x.rows()), sys.cfg.n, sys.topo.pa, std::move(syms));
    cb.rho.reset();
    if (cb.m >= 2) cb.achieved_dmin_sq = codebook_min_dist(cb);
    out.push_back(std::move(cb));
  }
  return out;
}

inline Constellation to_constellation(const Codebook& cb) {
  if (cb.n != 1) throw DomainError("to_constellation: codebook has n > 1");
  Constellation c;
  c.m = cb.m;
  c.pa = cb.pa;
  c.rho = cb.rho;
  c.points = cb.symbols();
  c.meta.m_on = cb.m_on;
  c.meta.on_indices = cb.on_indices;
  return c;
}

// Max-softmax decision of receiver r's head h for one received block.
class LearnedDecoder {
 public:
  LearnedDecoder(const AeSystem& sys, std::size_t rx, std::size_t head = 0) : sys_(&sys), rx_(rx) {
    const auto users = sys.topo.rx_users(rx);
    if (head >= users.size()) throw DomainError("LearnedDecoder: no such head");
    for (std::size_t h = 0; h < head; ++h) row_ += sys.topo.m[users[h]];
    size_ = sys.topo.m[users[head]];
  }

  std::size_t operator()(std::span<const cplx> y) const {
    const auto n = sys_->cfg.n;
    Eigen::MatrixXd in(static_cast<Eigen::Index>(2 * n), 1);
    const double s = 1.0 / std::sqrt(sys_->topo.pa);
    for (std::size_t i = 0; i < n; ++i) {
      in(static_cast<Eigen::Index>(2 * i), 0) = y[i].real() * s;
      in(static_cast<Eigen::Index>(2 * i + 1), 0) = y[i].imag() * s;
    }
    const auto p = mlp_forward(sys_->decoders[rx_], in);
    Eigen::Index best = 0;
    p.col(0).segment(static_cast<Eigen::Index>(row_), static_cast<Eigen::Index>(size_)).maxCoeff(&best);
    return static_cast<std::size_t>(best);
  }

 private:
  const AeSystem* sys_;
  std::size_t rx_;
  std::size_t row_ = 0;
  std::size_t size_ = 0;
};

struct EvalResult {
  std::vector<double> ser;    // per user
  std::vector<double> pd_uw;  // per receiver
  std::size_t trials = 0;
};

// Monte Carlo SER of every user with the system's own decoders, and
// delivered power per receiver, through the full multi-user channel.
inline EvalResult evaluate_system(const AeSystem& sys, std::size_t trials, std::uint64_t seed) {
  const auto& topo = sys.topo;
  const std::size_t chunk = 4096;
  const std::size_t chunks = (trials + chunk - 1) / chunk;
  std::vector<std::vector<std::size_t>> errs(chunks, std::vector<std::size_t>(topo.k(), 0));
  std::vector<std::vector<double>> pds(chunks, std::vector<double>(topo.n_rx(), 0.0));
  std::vector<detail::EncodeTrace> enc;
  for (std::size_t t = 0; t < topo.n_tx(); ++t) enc.push_back(detail::encode_forward(sys, t));
  const double in_scale = 1.0 / std::sqrt(topo.pa);

  parallel_chunks(chunks, [&](std::size_t c) {
    Rng base = Rng(seed).split(Stream::kEval).split(c);
    Rng msg_rng = base.split(Stream::kMessages);
    Rng noise_rng = base.split(Stream::kNoise);
    const std::size_t bsz = std::min(chunk, trials - c * chunk);
    std::vector<std::vector<std::size_t>> msgs;
    std::vector<Eigen::MatrixXd> noise;
    draw_batch(sys, bsz, msg_rng, noise_rng, msgs, noise);
    for (std::size_t r = 0; r < topo.n_rx(); ++r) {
      const Eigen::MatrixXd y = detail::received(sys, r, enc, msgs, noise[r]);
      const Eigen::MatrixXd p = mlp_forward(sys.decoders[r], y * in_scale);
      const auto users = topo.rx_users(r);
      Eigen::Index row = 0;
      for (auto u : users) {
        const auto mu = static_cast<Eigen::Index>(topo.m[u]);
        for (Eigen::Index l = 0; l < p.cols(); ++l) {
          Eigen::Index best = 0;
          p.col(l).segment(row, mu).maxCoeff(&best);
          if (static_cast<std::size_t>(best) != msgs[u][static_cast<std::size_t>(l)]) ++errs[c][u];
        }
        row += mu;
      }
      CompensatedSum s;
      for (Eigen::Index l = 0; l < y.cols(); ++l)
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(sys.cfg.n); ++i)
          s += harvest(sys.harvester, y(2 * i, l) * y(2 * i, l) + y(2 * i + 1, l) * y(2 * i + 1, l));
      pds[c][r] = s.value() / static_cast<double>(sys.cfg.n);
    }
  });

  EvalResult out;
  out.trials = trials;
  out.ser.assign(topo.k(), 0.0);
  for (std::size_t u = 0; u < topo.k(); ++u) {
    std::size_t e = 0;
    for (std::size_t c = 0; c < chunks; ++c) e += errs[c][u];
    out.ser[u] = static_cast<double>(e) / static_cast<double>(trials);
  }
  for (std::size_t r = 0; r < topo.n_rx(); ++r) {
    CompensatedSum s;
    for (std::size_t c = 0; c < chunks; ++c) s += pds[c][r];
    out.pd_uw.push_back(s.value() / static_cast<double>(trials));
  }
  return out;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central differences of composite_loss on a fixed batch. `indices` selects
// which flat parameters to perturb (all when empty and check_all is set).
inline GradCheckReport gradient_check(const AeSystem& sys, const std::vector<std::vector<std::size_t>>& messages,
                                      const std::vector<Eigen::MatrixXd>& noise, std::span<const std::size_t> indices,
                                      double step = 1e-5) {
  const auto analytic = composite_loss(sys, messages, noise).grad;
  AeSystem probe = sys;
  const Eigen::VectorXd theta = sys.flat_params();
  GradCheckReport rep;
  for (std::size_t idx : indices) {
    const auto k = static_cast<Eigen::Index>(idx);
    Eigen::VectorXd tp = theta;
    tp(k) += step;
    probe.set_flat_params(tp);
    const double lp = composite_loss(probe, messages, noise).loss;
    tp(k) = theta(k) - step;
    probe.set_flat_params(tp);
    const double lm = composite_loss(probe, messages, noise).loss;
    const double fd = (lp - lm) / (2.0 * step);
    const double a = analytic(k);
    const double den = std::max({std::abs(a), std::abs(fd), 1e-6});
    const double err = std::abs(a - fd) / den;
    if (err > rep.max_rel_error) {
      rep.max_rel_error = err;
      rep.worst_index = idx;
    }
    ++rep.checked;
  }
  return rep;
}

inline GradCheckReport gradient_check(const AeSystem& sys, std::size_t batch, std::uint64_t seed,
                                      double step = 1e-5) {
  const Rng root(seed);
  Rng mr = root.split(Stream::kMessages);
  Rng nr = root.split(Stream::kNoise);
  std::vector<std::vector<std::size_t>> messages;
  std::vector<Eigen::MatrixXd> noise;
  draw_batch(sys, batch, mr, nr, messages, noise);
  std::vector<std::size_t> all(sys.param_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return gradient_check(sys, messages, noise, all, step);
}

}  // namespace swipt
