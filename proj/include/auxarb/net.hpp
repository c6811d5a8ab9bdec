#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxarb/rng.hpp"
#include "auxarb/types.hpp"

namespace auxarb {

struct NetConfig {
  Index input_dim = 0;
  std::vector<Index> trunk = {64, 64};  // hidden widths, ReLU after each
  Index main_dim = 1;                   // linear main head
  Index aux_dim = 2;                    // raw-logit auxiliary head
  std::uint64_t seed = 0;
};

/**
 * Shared-trunk / two-head dense network.
 *
 * All weights and biases live in one flat parameter vector; layers are Eigen
 * maps into it. Gradients come back as a flat vector with the same layout,
 * which is what the parameter optimizer and the finite-difference checker
 * operate on. Batches are row-major: inputs are [B x D].
 */
template <typename Scalar>
class DenseNet {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;
  using WeightMap = Eigen::Map<Matrix>;
  using ConstWeightMap = Eigen::Map<const Matrix>;
  using BiasMap = Eigen::Map<RowVectorX<Scalar>>;
  using ConstBiasMap = Eigen::Map<const RowVectorX<Scalar>>;

  struct Slot {
    Index in = 0, out = 0;
    Index w_off = 0, b_off = 0;  // offsets into the flat parameter vector
  };

  struct Cache {
    Matrix input;                // [B x D]
    std::vector<Matrix> pre;     // trunk pre-activations
    std::vector<Matrix> act;     // trunk post-ReLU activations
    const void* net_tag = nullptr;
    Index batch() const { return input.rows(); }
  };

  struct Outputs {
    Matrix main;   // [B x main_dim]
    Matrix aux;    // [B x aux_dim]
    Cache cache;
  };

  explicit DenseNet(const NetConfig& cfg) : cfg_(cfg) {
    if (cfg.input_dim < 1 || cfg.main_dim < 1 || cfg.aux_dim < 1) {
      throw std::invalid_argument("DenseNet: all layer dimensions must be >= 1");
    }
    Index prev = cfg.input_dim;
    Index off = 0;
    for (Index width : cfg.trunk) {
      if (width < 1) throw std::invalid_argument("DenseNet: trunk width must be >= 1");
      trunk_.push_back(make_slot(prev, width, off));
      prev = width;
    }
    head_main_ = make_slot(prev, cfg.main_dim, off);
    head_aux_ = make_slot(prev, cfg.aux_dim, off);
    params_ = Vector::Zero(off);
    init_params();
  }

  Index input_dim() const { return cfg_.input_dim; }
  Index main_dim() const { return cfg_.main_dim; }
  Index aux_dim() const { return cfg_.aux_dim; }
  Index trunk_out_dim() const { return trunk_.empty() ? cfg_.input_dim : trunk_.back().out; }
  const NetConfig& config() const { return cfg_; }

  Index param_count() const { return params_.size(); }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  /// Flat gradient layout matches params(); trunk parameters come first.
  Index trunk_param_count() const {
    return trunk_.empty() ? 0 : head_main_.w_off;
  }

  ConstWeightMap weight(const Slot& s) const {
    return ConstWeightMap(params_.data() + s.w_off, s.in, s.out);
  }
  ConstBiasMap bias(const Slot& s) const {
    return ConstBiasMap(params_.data() + s.b_off, s.out);
  }
  WeightMap weight(const Slot& s) {
    return WeightMap(params_.data() + s.w_off, s.in, s.out);
  }
  BiasMap bias(const Slot& s) {
    return BiasMap(params_.data() + s.b_off, s.out);
  }

  const std::vector<Slot>& trunk_slots() const { return trunk_; }
  const Slot& main_slot() const { return head_main_; }
  const Slot& aux_slot() const { return head_aux_; }

  Outputs forward(const Matrix& inputs) const {
    if (inputs.cols() != cfg_.input_dim) {
      throw std::invalid_argument(
          "DenseNet::forward: input width " + std::to_string(inputs.cols()) +
          " does not match net input dim " + std::to_string(cfg_.input_dim));
    }
    Outputs out;
    out.cache.input = inputs;
    out.cache.net_tag = this;
    Matrix a = inputs;
    for (const Slot& s : trunk_) {
      Matrix z = (a * weight(s)).rowwise() + bias(s);
      out.cache.pre.push_back(z);
      a = z.cwiseMax(Scalar(0));
      out.cache.act.push_back(a);
    }
    out.main = (a * weight(head_main_)).rowwise() + bias(head_main_);
    out.aux = (a * weight(head_aux_)).rowwise() + bias(head_aux_);
    return out;
  }

  /**
   * Backpropagate head output gradients to a flat parameter gradient.
   * Contributions from both heads accumulate additively in the trunk.
   */
  Vector backward(const Cache& cache, const Matrix& d_main, const Matrix& d_aux) const {
    if (cache.net_tag != this) {
      throw std::invalid_argument("DenseNet::backward: cache was produced by a different net");
    }
    const Index b = cache.batch();
    if (d_main.rows() != b || d_main.cols() != cfg_.main_dim ||
        d_aux.rows() != b || d_aux.cols() != cfg_.aux_dim) {
      throw std::invalid_argument("DenseNet::backward: gradient shapes do not match forward outputs");
    }
    Vector grads = Vector::Zero(params_.size());
    const Matrix& top = trunk_.empty() ? cache.input : cache.act.back();

    grad_weight(grads, head_main_) = top.transpose() * d_main;
    grad_bias(grads, head_main_) = d_main.colwise().sum();
    grad_weight(grads, head_aux_) = top.transpose() * d_aux;
    grad_bias(grads, head_aux_) = d_aux.colwise().sum();

    Matrix da = d_main * weight(head_main_).transpose() +
                d_aux * weight(head_aux_).transpose();
    for (Index l = static_cast<Index>(trunk_.size()) - 1; l >= 0; --l) {
      const Slot& s = trunk_[static_cast<std::size_t>(l)];
      Matrix dz = da.array() * (cache.pre[static_cast<std::size_t>(l)].array() > Scalar(0)).template cast<Scalar>();
      const Matrix& below = (l == 0) ? cache.input : cache.act[static_cast<std::size_t>(l) - 1];
      grad_weight(grads, s) = below.transpose() * dz;
      grad_bias(grads, s) = dz.colwise().sum();
      da = dz * weight(s).transpose();
    }
    return grads;
  }

 private:
  Slot make_slot(Index in, Index out, Index& off) {
    Slot s;
    s.in = in;
    s.out = out;
    s.w_off = off;
    off += in * out;
    s.b_off = off;
    off += out;
    return s;
  }

  WeightMap grad_weight(Vector& g, const Slot& s) const {
    return WeightMap(g.data() + s.w_off, s.in, s.out);
  }
  BiasMap grad_bias(Vector& g, const Slot& s) const {
    return BiasMap(g.data() + s.b_off, s.out);
  }

  // Glorot-uniform weights, zero biases; draw order is fixed so a seed pins
  // the whole parameter vector.
  void init_params() {
    Rng rng(cfg_.seed);
    auto fill = [&](const Slot& s) {
      const Scalar limit = std::sqrt(Scalar(6) / static_cast<Scalar>(s.in + s.out));
      WeightMap w(params_.data() + s.w_off, s.in, s.out);
      for (Index j = 0; j < s.out; ++j) {
        for (Index i = 0; i < s.in; ++i) {
          w(i, j) = static_cast<Scalar>(rng.uniform(-limit, limit));
        }
      }
    };
    for (const Slot& s : trunk_) fill(s);
    fill(head_main_);
    fill(head_aux_);
  }

  NetConfig cfg_;
  std::vector<Slot> trunk_;
  Slot head_main_, head_aux_;
  Vector params_;
};

}  // namespace auxarb
