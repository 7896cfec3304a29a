#pragma once

// Fully connected networks evaluated on column batches, with hand-written
// reverse-mode gradients. Parameters of one network live in a single flat
// vector; layer weights and biases are views into it.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

#include "swipt/errors.hpp"
#include "swipt/rng.hpp"

namespace swipt {

enum class Activation { kTanh, kIdentity, kSoftmax };

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::kTanh;
};

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct MlpParams {
  std::vector<LayerShape> layers;
  std::vector<std::size_t> offsets;  // start of each layer's W; b follows W
  // Softmax head sizes for a softmax output layer (sum = output width).
  std::vector<std::size_t> heads;
  Eigen::VectorXd theta;

  MlpParams() = default;

  MlpParams(std::vector<LayerShape> shapes, std::vector<std::size_t> head_sizes = {})
      : layers(std::move(shapes)), heads(std::move(head_sizes)) {
    if (layers.empty()) throw DomainError("MlpParams: no layers");
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (l > 0 && layers[l].in != layers[l - 1].out)
        throw DomainError("MlpParams: incompatible adjacent layer sizes");
      offsets.push_back(off);
      off += layers[l].out * layers[l].in + layers[l].out;
    }
    theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
    if (layers.back().act == Activation::kSoftmax && heads.empty()) heads = {layers.back().out};
  }

  std::size_t size() const { return static_cast<std::size_t>(theta.size()); }
  std::size_t input_dim() const { return layers.front().in; }
  std::size_t output_dim() const { return layers.back().out; }

  ConstMatMap w(std::size_t l) const {
    return {theta.data() + offsets[l], static_cast<Eigen::Index>(layers[l].out),
            static_cast<Eigen::Index>(layers[l].in)};
  }
  ConstVecMap b(std::size_t l) const {
    return {theta.data() + offsets[l] + layers[l].out * layers[l].in,
            static_cast<Eigen::Index>(layers[l].out)};
  }

  // Views of a gradient vector laid out like theta.
  MatMap w_of(Eigen::VectorXd& g, std::size_t l) const {
    return {g.data() + offsets[l], static_cast<Eigen::Index>(layers[l].out),
            static_cast<Eigen::Index>(layers[l].in)};
  }
  VecMap b_of(Eigen::VectorXd& g, std::size_t l) const {
    return {g.data() + offsets[l] + layers[l].out * layers[l].in,
            static_cast<Eigen::Index>(layers[l].out)};
  }

  bool finite() const { return theta.allFinite(); }
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
inline void xavier_init(MlpParams& p, Rng& rng) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& s = p.layers[l];
    const double lim = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    double* w = p.theta.data() + p.offsets[l];
    for (std::size_t k = 0; k < s.in * s.out; ++k) w[k] = rng.uniform(-lim, lim);
    for (std::size_t k = 0; k < s.out; ++k) w[s.in * s.out + k] = 0.0;
  }
}

// Column-wise softmax over each head block, in place.
inline void softmax_heads(Eigen::MatrixXd& z, const std::vector<std::size_t>& heads) {
  Eigen::Index row = 0;
  for (std::size_t h : heads) {
    auto blk = z.middleRows(row, static_cast<Eigen::Index>(h));
    for (Eigen::Index c = 0; c < blk.cols(); ++c) {
      auto col = blk.col(c);
      const double mx = col.maxCoeff();
      col = (col.array() - mx).exp().matrix();
      col /= col.sum();
    }
    row += static_cast<Eigen::Index>(h);
  }
}

struct MlpCache {
  std::vector<Eigen::MatrixXd> act;  // act[0] = input, act[l+1] = layer l output
};

inline Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& x, MlpCache* cache = nullptr) {
  Eigen::MatrixXd a = x;
  if (cache) {
    cache->act.clear();
    cache->act.push_back(a);
  }
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    Eigen::MatrixXd z = p.w(l) * a;
    z.colwise() += p.b(l);
    switch (p.layers[l].act) {
      case Activation::kTanh: z = z.array().tanh().matrix(); break;
      case Activation::kIdentity: break;
      case Activation::kSoftmax: softmax_heads(z, p.heads); break;
    }
    a = std::move(z);
    if (cache) cache->act.push_back(a);
  }
  return a;
}

// Accumulates parameter gradients into grad and returns d(loss)/d(input).
// For a softmax output layer, d_out is taken with respect to the logits.
inline Eigen::MatrixXd mlp_backward(const MlpParams& p, const MlpCache& cache, Eigen::MatrixXd d_out,
                                    Eigen::VectorXd& grad) {
  Eigen::MatrixXd d = std::move(d_out);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    if (p.layers[li].act == Activation::kTanh) {
      const auto& h = cache.act[li + 1];
      d = (d.array() * (1.0 - h.array().square())).matrix();
    }
    const auto& a_in = cache.act[li];
    p.w_of(grad, li).noalias() += d * a_in.transpose();
    p.b_of(grad, li) += d.rowwise().sum();
    d = p.w(li).transpose() * d;
  }
  return d;
}

// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void set_learning_rate(double lr) { lr_ = lr; }

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    if (m_.size() != theta.size()) {
      m_ = Eigen::VectorXd::Zero(theta.size());
      v_ = Eigen::VectorXd::Zero(theta.size());
      t_ = 0;
    }
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  double lr_, b1_, b2_, eps_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

}  // namespace swipt
