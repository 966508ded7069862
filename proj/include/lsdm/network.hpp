#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsdm/graph.hpp"
#include "lsdm/rng.hpp"
#include "lsdm/tensor.hpp"

namespace lsdm::nn {

enum class Activation { linear, relu, leaky_relu, tanh, sigmoid };

struct LayerAct {
  Activation kind = Activation::linear;
  double slope = 0.0;  // leaky_relu negative-side slope

  static LayerAct linear() { return {Activation::linear, 0.0}; }
  static LayerAct relu() { return {Activation::relu, 0.0}; }
  static LayerAct leaky(double a) { return {Activation::leaky_relu, a}; }
  static LayerAct tanh() { return {Activation::tanh, 0.0}; }
  static LayerAct sigmoid() { return {Activation::sigmoid, 0.0}; }
};

enum class Init { automatic, he, xavier_uniform, identity };

struct MlpSpec {
  std::vector<std::size_t> dims;  // [N0 .. NL]
  std::vector<LayerAct> acts;     // one per affine layer
  Init init = Init::automatic;

  /// Hidden layers share one activation, the output layer gets another.
  static MlpSpec make(std::vector<std::size_t> dims, LayerAct hidden,
                      LayerAct output) {
    MlpSpec s;
    s.dims = std::move(dims);
    if (s.dims.size() < 2)
      throw std::invalid_argument("mlp: need at least one layer");
    s.acts.assign(s.dims.size() - 2, hidden);
    s.acts.push_back(output);
    return s;
  }
};

/// Fully connected network: affine layers with per-layer activations.
/// Weights are master copies owned here; graph-mode forward binds them into
/// a Graph as parameter (trainable) or constant (frozen) nodes. A Network
/// not attached to a live graph is freely transferable between threads.
class Network {
 public:
  Network() = default;

  static Network build(const MlpSpec& spec, Rng& rng) {
    if (spec.dims.size() < 2)
      throw std::invalid_argument("build_mlp: need at least one layer");
    for (std::size_t d : spec.dims)
      if (d == 0) throw std::invalid_argument("build_mlp: dimension must be >= 1");
    if (spec.acts.size() != spec.dims.size() - 1)
      throw std::invalid_argument("build_mlp: one activation per layer");

    Network net;
    net.dims_ = spec.dims;
    net.acts_ = spec.acts;
    for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
      const std::size_t fan_in = spec.dims[l], fan_out = spec.dims[l + 1];
      Tensor w = Tensor::zeros({fan_out, fan_in});
      Init init = spec.init;
      if (init == Init::automatic) {
        const Activation a = spec.acts[l].kind;
        init = (a == Activation::relu || a == Activation::leaky_relu)
                   ? Init::he
                   : Init::xavier_uniform;
      }
      switch (init) {
        case Init::he: {
          const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
          for (auto& v : w.values) v = std * rng.normal();
          break;
        }
        case Init::xavier_uniform: {
          const double lim =
              std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
          for (auto& v : w.values) v = rng.uniform(-lim, lim);
          break;
        }
        case Init::identity: {
          if (fan_in != fan_out)
            throw std::invalid_argument("build_mlp: identity init needs square layers");
          for (std::size_t i = 0; i < fan_out; ++i) w.at(i, i) = 1.0;
          break;
        }
        case Init::automatic:
          break;
      }
      net.weights_.push_back(std::move(w));
      net.biases_.push_back(Tensor::zeros({fan_out}));
    }
    return net;
  }

  std::size_t depth() const { return weights_.size(); }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<LayerAct>& activations() const { return acts_; }
  const std::vector<Tensor>& weights() const { return weights_; }
  const std::vector<Tensor>& biases() const { return biases_; }
  Tensor& weight(std::size_t l) { return weights_[l]; }
  Tensor& bias(std::size_t l) { return biases_[l]; }

  /// S(f) = sum over layers of (N_i * N_{i-1} + N_i).
  std::size_t param_count() const {
    std::size_t s = 0;
    for (std::size_t l = 0; l < depth(); ++l)
      s += weights_[l].size() + biases_[l].size();
    return s;
  }

  /// Flat parameter list, weights and biases interleaved per layer. Order is
  /// the contract shared by optimizers, EMA shadows and checkpoints.
  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    for (std::size_t l = 0; l < depth(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    return out;
  }
  std::vector<const Tensor*> parameters() const {
    std::vector<const Tensor*> out;
    for (std::size_t l = 0; l < depth(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    return out;
  }

  void set_parameters(const std::vector<Tensor>& flat) {
    auto ps = parameters();
    if (flat.size() != ps.size())
      throw std::invalid_argument("network: parameter count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (!ps[i]->same_shape(flat[i]))
        throw std::invalid_argument("network: parameter shape mismatch");
      *ps[i] = flat[i];
    }
  }

  /// Bind parameters into a graph as trainable nodes.
  std::vector<Value> bind(Graph& g) const {
    std::vector<Value> out;
    for (std::size_t l = 0; l < depth(); ++l) {
      out.push_back(g.parameter(weights_[l]));
      out.push_back(g.parameter(biases_[l]));
    }
    return out;
  }

  /// Bind parameters as constants (frozen module in a larger graph).
  std::vector<Value> bind_frozen(Graph& g) const {
    std::vector<Value> out;
    for (std::size_t l = 0; l < depth(); ++l) {
      out.push_back(g.constant(weights_[l]));
      out.push_back(g.constant(biases_[l]));
    }
    return out;
  }

  /// Graph-mode forward: records every intermediate as a node.
  Value forward(Graph& g, const std::vector<Value>& bound, Value in) const {
    if (in.tensor().rank() != 2 || in.tensor().cols() != input_dim())
      throw std::invalid_argument("forward: batch shape mismatch");
    Value h = in;
    for (std::size_t l = 0; l < depth(); ++l) {
      Value a = g.add_rowvec(g.matmul_nt(h, bound[2 * l]), bound[2 * l + 1]);
      h = apply_act(g, a, acts_[l]);
    }
    return h;
  }

  /// Pure forward on values, no graph recording; thread-safe.
  Tensor forward_values(const Tensor& batch) const {
    if (batch.rank() != 2 || batch.cols() != input_dim())
      throw std::invalid_argument("forward: batch shape mismatch");
    if (!batch.all_finite())
      throw std::invalid_argument("forward: non-finite input");
    Tensor h = batch;
    for (std::size_t l = 0; l < depth(); ++l) {
      Tensor a = Tensor::zeros({h.rows(), weights_[l].rows()});
      detail::mm_nt(h, weights_[l], a);
      const Tensor& b = biases_[l];
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) a.at(r, c) += b.values[c];
      apply_act_values(a, acts_[l]);
      h = std::move(a);
    }
    return h;
  }

  static Value apply_act(Graph& g, Value a, LayerAct act) {
    switch (act.kind) {
      case Activation::linear: return a;
      case Activation::relu: return g.relu(a);
      case Activation::leaky_relu: return g.leaky_relu(a, act.slope);
      case Activation::tanh: return g.tanh_fn(a);
      case Activation::sigmoid: return g.sigmoid_fn(a);
    }
    throw std::invalid_argument("unknown activation");
  }

 private:
  static void apply_act_values(Tensor& a, LayerAct act) {
    switch (act.kind) {
      case Activation::linear:
        return;
      case Activation::relu:
        for (auto& v : a.values) v = v > 0.0 ? v : 0.0;
        return;
      case Activation::leaky_relu:
        for (auto& v : a.values) v = v > 0.0 ? v : act.slope * v;
        return;
      case Activation::tanh:
        for (auto& v : a.values) v = std::tanh(v);
        return;
      case Activation::sigmoid:
        for (auto& v : a.values) v = 1.0 / (1.0 + std::exp(-v));
        return;
    }
  }

  std::vector<std::size_t> dims_;
  std::vector<LayerAct> acts_;
  std::vector<Tensor> weights_, biases_;
};

inline std::string activation_name(LayerAct a) {
  switch (a.kind) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "leaky_relu(%.17g)", a.slope);
      return buf;
    }
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

inline LayerAct activation_from_name(const std::string& s) {
  if (s == "linear") return LayerAct::linear();
  if (s == "relu") return LayerAct::relu();
  if (s == "tanh") return LayerAct::tanh();
  if (s == "sigmoid") return LayerAct::sigmoid();
  if (s.rfind("leaky_relu(", 0) == 0 && s.back() == ')')
    return LayerAct::leaky(std::stod(s.substr(11, s.size() - 12)));
  throw std::invalid_argument("unknown activation tag: " + s);
}

}  // namespace lsdm::nn
