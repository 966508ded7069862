#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsdm/assignment.hpp"
#include "lsdm/tensor.hpp"

namespace lsdm::nn {

enum class Op {
  constant,
  parameter,
  input,
  matmul,     // A(r x k) * B(k x m)
  matmul_nt,  // A(r x k) * B(m x k)^T
  matmul_tn,  // A(k x r)^T * B(k x m)
  add,
  sub,
  mul,
  neg,
  add_rowvec,  // matrix + rank-1 row vector broadcast over rows
  scalar_mul,
  scalar_add,
  relu,
  leaky_relu,
  tanh_fn,
  sigmoid_fn,
  act_mask,  // pointwise derivative of relu / leaky_relu at the input values
  square,
  exp_fn,
  softplus,
  rownorm,  // (r x m) -> (r x 1) Euclidean row norms
  rowsum,   // (r x m) -> (r x 1)
  sum_all,
  mean_all,
  concat_cols,
  slice_cols,  // a0 = first column, a1 = one past last
  pad_cols,    // embed into a0..(a0+cols) of a1 total columns
  assignment_w1,  // mean matched distance to a constant point set
};

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
struct Value {
  Graph* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Tensor& tensor() const;
  const std::vector<std::size_t>& shape() const { return tensor().shape; }
  double scalar() const { return tensor().scalar_value(); }
};

/// Reverse-mode computation graph. Nodes are evaluated eagerly at
/// construction, so construction order is a topological order. One graph is
/// owned by one training step and is not thread-safe; tensors extracted from
/// it are plain values and can move freely.
class Graph {
 public:
  struct Node {
    Op op;
    std::array<int, 2> in{-1, -1};
    Tensor value;
    double a0 = 0.0, a1 = 0.0;
    std::vector<std::size_t> match;  // assignment_w1 permutation
    Tensor aux;                      // assignment_w1 reference point set
  };

  Value constant(Tensor t) { return emplace(Op::constant, std::move(t)); }
  Value parameter(Tensor t) { return emplace(Op::parameter, std::move(t)); }
  Value input(Tensor t) { return emplace(Op::input, std::move(t)); }

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t node_count() const { return nodes_.size(); }

  // ---- arithmetic ----

  Value matmul(Value a, Value b) {
    check(a, b);
    const Tensor &ta = t(a), &tb = t(b);
    if (ta.cols() != tb.rows()) throw std::invalid_argument("matmul: shape");
    Tensor out = Tensor::zeros({ta.rows(), tb.cols()});
    detail::mm_nn(ta, tb, out);
    return emplace(Op::matmul, std::move(out), a.id, b.id);
  }

  Value matmul_nt(Value a, Value b) {
    check(a, b);
    const Tensor &ta = t(a), &tb = t(b);
    if (ta.cols() != tb.cols()) throw std::invalid_argument("matmul_nt: shape");
    Tensor out = Tensor::zeros({ta.rows(), tb.rows()});
    detail::mm_nt(ta, tb, out);
    return emplace(Op::matmul_nt, std::move(out), a.id, b.id);
  }

  Value matmul_tn(Value a, Value b) {
    check(a, b);
    const Tensor &ta = t(a), &tb = t(b);
    if (ta.rows() != tb.rows()) throw std::invalid_argument("matmul_tn: shape");
    Tensor out = Tensor::zeros({ta.cols(), tb.cols()});
    detail::mm_tn(ta, tb, out);
    return emplace(Op::matmul_tn, std::move(out), a.id, b.id);
  }

  Value add(Value a, Value b) { return elementwise(Op::add, a, b); }
  Value sub(Value a, Value b) { return elementwise(Op::sub, a, b); }
  Value mul(Value a, Value b) { return elementwise(Op::mul, a, b); }

  Value neg(Value a) {
    Tensor out = t(a);
    for (auto& v : out.values) v = -v;
    return emplace(Op::neg, std::move(out), a.id);
  }

  Value add_rowvec(Value a, Value b) {
    check(a, b);
    const Tensor &ta = t(a), &tb = t(b);
    if (tb.rank() != 1 || ta.rank() != 2 || ta.cols() != tb.shape[0])
      throw std::invalid_argument("add_rowvec: shape");
    Tensor out = ta;
    for (std::size_t r = 0; r < ta.rows(); ++r)
      for (std::size_t c = 0; c < ta.cols(); ++c)
        out.values[r * ta.cols() + c] += tb.values[c];
    return emplace(Op::add_rowvec, std::move(out), a.id, b.id);
  }

  Value scalar_mul(Value a, double c) {
    Tensor out = t(a);
    for (auto& v : out.values) v *= c;
    Value r = emplace(Op::scalar_mul, std::move(out), a.id);
    mut(r).a0 = c;
    return r;
  }

  Value scalar_add(Value a, double c) {
    Tensor out = t(a);
    for (auto& v : out.values) v += c;
    Value r = emplace(Op::scalar_add, std::move(out), a.id);
    mut(r).a0 = c;
    return r;
  }

  // ---- activations ----

  Value relu(Value a) {
    Tensor out = t(a);
    for (auto& v : out.values) v = v > 0.0 ? v : 0.0;
    return emplace(Op::relu, std::move(out), a.id);
  }

  Value leaky_relu(Value a, double slope) {
    Tensor out = t(a);
    for (auto& v : out.values) v = v > 0.0 ? v : slope * v;
    Value r = emplace(Op::leaky_relu, std::move(out), a.id);
    mut(r).a0 = slope;
    return r;
  }

  Value tanh_fn(Value a) {
    Tensor out = t(a);
    for (auto& v : out.values) v = std::tanh(v);
    return emplace(Op::tanh_fn, std::move(out), a.id);
  }

  Value sigmoid_fn(Value a) {
    Tensor out = t(a);
    for (auto& v : out.values) v = 1.0 / (1.0 + std::exp(-v));
    return emplace(Op::sigmoid_fn, std::move(out), a.id);
  }

  /// Pointwise slope of relu (slope = 0) or leaky_relu at a's values.
  /// Piecewise constant, so its own derivative is zero; this is what makes
  /// the emitted gradient nodes exact for piecewise-linear critics.
  Value act_mask(Value a, double slope) {
    Tensor out = t(a);
    for (auto& v : out.values) v = v > 0.0 ? 1.0 : slope;
    Value r = emplace(Op::act_mask, std::move(out), a.id);
    mut(r).a0 = slope;
    return r;
  }

  Value square(Value a) {
    Tensor out = t(a);
    for (auto& v : out.values) v *= v;
    return emplace(Op::square, std::move(out), a.id);
  }

  Value exp_fn(Value a) {
    Tensor out = t(a);
    for (auto& v : out.values) v = std::exp(v);
    return emplace(Op::exp_fn, std::move(out), a.id);
  }

  Value softplus(Value a) {
    Tensor out = t(a);
    for (auto& v : out.values)
      v = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    return emplace(Op::softplus, std::move(out), a.id);
  }

  // ---- reductions ----

  Value rownorm(Value a) {
    const Tensor& ta = t(a);
    Tensor out = Tensor::zeros({ta.rows(), 1});
    for (std::size_t r = 0; r < ta.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < ta.cols(); ++c) {
        const double v = ta.at(r, c);
        s += v * v;
      }
      out.values[r] = std::sqrt(s);
    }
    return emplace(Op::rownorm, std::move(out), a.id);
  }

  Value rowsum(Value a) {
    const Tensor& ta = t(a);
    Tensor out = Tensor::zeros({ta.rows(), 1});
    for (std::size_t r = 0; r < ta.rows(); ++r)
      for (std::size_t c = 0; c < ta.cols(); ++c)
        out.values[r] += ta.at(r, c);
    return emplace(Op::rowsum, std::move(out), a.id);
  }

  Value sum_all(Value a) {
    double s = 0.0;
    for (double v : t(a).values) s += v;
    return emplace(Op::sum_all, Tensor::scalar(s), a.id);
  }

  Value mean_all(Value a) {
    double s = 0.0;
    for (double v : t(a).values) s += v;
    return emplace(Op::mean_all,
                   Tensor::scalar(s / static_cast<double>(t(a).size())), a.id);
  }

  // ---- structure ----

  Value concat_cols(Value a, Value b) {
    check(a, b);
    const Tensor &ta = t(a), &tb = t(b);
    if (ta.rows() != tb.rows())
      throw std::invalid_argument("concat_cols: row mismatch");
    Tensor out = Tensor::zeros({ta.rows(), ta.cols() + tb.cols()});
    for (std::size_t r = 0; r < ta.rows(); ++r) {
      for (std::size_t c = 0; c < ta.cols(); ++c) out.at(r, c) = ta.at(r, c);
      for (std::size_t c = 0; c < tb.cols(); ++c)
        out.at(r, ta.cols() + c) = tb.at(r, c);
    }
    return emplace(Op::concat_cols, std::move(out), a.id, b.id);
  }

  Value slice_cols(Value a, std::size_t c0, std::size_t c1) {
    const Tensor& ta = t(a);
    if (c0 >= c1 || c1 > ta.cols())
      throw std::invalid_argument("slice_cols: bounds");
    Tensor out = Tensor::zeros({ta.rows(), c1 - c0});
    for (std::size_t r = 0; r < ta.rows(); ++r)
      for (std::size_t c = c0; c < c1; ++c) out.at(r, c - c0) = ta.at(r, c);
    Value v = emplace(Op::slice_cols, std::move(out), a.id);
    mut(v).a0 = static_cast<double>(c0);
    mut(v).a1 = static_cast<double>(c1);
    return v;
  }

  Value pad_cols(Value a, std::size_t c0, std::size_t total) {
    const Tensor& ta = t(a);
    if (c0 + ta.cols() > total) throw std::invalid_argument("pad_cols: bounds");
    Tensor out = Tensor::zeros({ta.rows(), total});
    for (std::size_t r = 0; r < ta.rows(); ++r)
      for (std::size_t c = 0; c < ta.cols(); ++c)
        out.at(r, c0 + c) = ta.at(r, c);
    Value v = emplace(Op::pad_cols, std::move(out), a.id);
    mut(v).a0 = static_cast<double>(c0);
    mut(v).a1 = static_cast<double>(total);
    return v;
  }

  /// Mean matched Euclidean distance between the rows of `a` and a fixed
  /// point set, under the optimal assignment solved at the current values.
  /// The backward pass holds the matching fixed (envelope gradient).
  Value assignment_w1(Value a, Tensor reference) {
    const Tensor& ta = t(a);
    if (reference.rank() != 2 || ta.rank() != 2 ||
        reference.rows() != ta.rows() || reference.cols() != ta.cols())
      throw std::invalid_argument("assignment_w1: shape mismatch");
    const std::size_t n = ta.rows(), d = ta.cols();
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = ta.at(i, c) - reference.at(j, c);
          s += diff * diff;
        }
        cost[i * n + j] = std::sqrt(s);
      }
    auto perm = ot::solve_assignment(cost, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
    Value v = emplace(Op::assignment_w1,
                      Tensor::scalar(total / static_cast<double>(n)), a.id);
    mut(v).match = std::move(perm);
    mut(v).aux = std::move(reference);
    return v;
  }

  // ---- reverse mode ----

  /// Exact reverse-mode gradients of a rank-0 node with respect to every
  /// node in the graph. grad_of(result, v) is zero for nodes the loss does
  /// not reach.
  struct Gradients {
    std::vector<Tensor> adj;
    std::vector<char> present;

    Tensor get(const Value& v) const {
      if (present[static_cast<std::size_t>(v.id)])
        return adj[static_cast<std::size_t>(v.id)];
      return Tensor::zeros(v.tensor().shape);
    }
  };

  Gradients backward(Value loss) {
    if (loss.graph != this)
      throw std::invalid_argument("backward: node belongs to another graph");
    if (t(loss).rank() != 0)
      throw std::invalid_argument("backward: loss must be a scalar node");
    Gradients g;
    g.adj.resize(nodes_.size());
    g.present.assign(nodes_.size(), 0);
    seed(g, loss.id, Tensor::scalar(1.0));
    for (int id = loss.id; id >= 0; --id) {
      if (!g.present[static_cast<std::size_t>(id)]) continue;
      vjp(g, id);
    }
    return g;
  }

  /// Emit the gradient of the column sum of a per-sample scalar node with
  /// respect to `input` as new graph nodes, so any function of the result
  /// stays differentiable with respect to parameters on the path (the
  /// double backpropagation contract of the gradient penalty). Supports the
  /// affine / piecewise-linear op set; throws on ops with curvature.
  Value input_gradient_node(Value per_sample, Value input) {
    if (per_sample.graph != this || input.graph != this)
      throw std::invalid_argument("input_gradient_node: foreign node");
    const Tensor& ts = t(per_sample);
    if (ts.rank() != 2 || ts.cols() != 1)
      throw std::invalid_argument(
          "input_gradient_node: per-sample node must have shape (batch, 1)");

    // Nodes through which `input` flows into `per_sample`.
    std::vector<char> reaches_input(nodes_.size(), 0);
    reaches_input[static_cast<std::size_t>(input.id)] = 1;
    for (std::size_t i = static_cast<std::size_t>(input.id) + 1;
         i < nodes_.size(); ++i)
      for (int e : nodes_[i].in)
        if (e >= 0 && reaches_input[static_cast<std::size_t>(e)])
          reaches_input[i] = 1;
    if (!reaches_input[static_cast<std::size_t>(per_sample.id)])
      throw std::invalid_argument(
          "input_gradient_node: input is not an ancestor of the scalar");

    std::vector<Value> adj(nodes_.size());
    auto accumulate = [&](int id, Value v) {
      adj[static_cast<std::size_t>(id)] =
          adj[static_cast<std::size_t>(id)].valid()
              ? add(adj[static_cast<std::size_t>(id)], v)
              : v;
    };
    accumulate(per_sample.id, constant(Tensor::full(ts.shape, 1.0)));

    for (int id = per_sample.id; id > input.id; --id) {
      if (!reaches_input[static_cast<std::size_t>(id)]) continue;
      Value a = adj[static_cast<std::size_t>(id)];
      if (!a.valid()) continue;
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      const Value in0{this, n.in[0]}, in1{this, n.in[1]};
      auto wanted = [&](int e) {
        return e >= 0 && reaches_input[static_cast<std::size_t>(e)];
      };
      switch (n.op) {
        case Op::matmul_nt:
          if (wanted(n.in[0])) accumulate(n.in[0], matmul(a, in1));
          if (wanted(n.in[1])) accumulate(n.in[1], matmul_tn(a, in0));
          break;
        case Op::matmul:
          if (wanted(n.in[0])) accumulate(n.in[0], matmul_nt(a, in1));
          if (wanted(n.in[1])) accumulate(n.in[1], matmul_tn(in0, a));
          break;
        case Op::matmul_tn:
          if (wanted(n.in[0])) accumulate(n.in[0], matmul_nt(in1, a));
          if (wanted(n.in[1])) accumulate(n.in[1], matmul(in0, a));
          break;
        case Op::add:
          if (wanted(n.in[0])) accumulate(n.in[0], a);
          if (wanted(n.in[1])) accumulate(n.in[1], a);
          break;
        case Op::sub:
          if (wanted(n.in[0])) accumulate(n.in[0], a);
          if (wanted(n.in[1])) accumulate(n.in[1], neg(a));
          break;
        case Op::mul:
          if (wanted(n.in[0])) accumulate(n.in[0], mul(a, in1));
          if (wanted(n.in[1])) accumulate(n.in[1], mul(a, in0));
          break;
        case Op::neg:
          accumulate(n.in[0], neg(a));
          break;
        case Op::add_rowvec:
          if (wanted(n.in[1]))
            throw std::invalid_argument(
                "input_gradient_node: input may not flow through a bias");
          accumulate(n.in[0], a);
          break;
        case Op::scalar_mul:
          accumulate(n.in[0], scalar_mul(a, n.a0));
          break;
        case Op::scalar_add:
          accumulate(n.in[0], a);
          break;
        case Op::relu:
          accumulate(n.in[0], mul(a, act_mask(in0, 0.0)));
          break;
        case Op::leaky_relu:
          accumulate(n.in[0], mul(a, act_mask(in0, n.a0)));
          break;
        case Op::square:
          accumulate(n.in[0], mul(a, scalar_mul(in0, 2.0)));
          break;
        case Op::concat_cols: {
          const std::size_t ca = t(in0).cols();
          if (wanted(n.in[0])) accumulate(n.in[0], slice_cols(a, 0, ca));
          if (wanted(n.in[1]))
            accumulate(n.in[1], slice_cols(a, ca, ca + t(in1).cols()));
          break;
        }
        case Op::slice_cols:
          accumulate(n.in[0],
                     pad_cols(a, static_cast<std::size_t>(n.a0),
                              t(in0).cols()));
          break;
        case Op::pad_cols:
          accumulate(n.in[0],
                     slice_cols(a, static_cast<std::size_t>(n.a0),
                                static_cast<std::size_t>(n.a0) +
                                    t(in0).cols()));
          break;
        default:
          throw std::invalid_argument(
              "input_gradient_node: op " + op_name(n.op) +
              " is not supported on the gradient path");
      }
    }
    Value result = adj[static_cast<std::size_t>(input.id)];
    if (!result.valid())
      throw std::invalid_argument(
          "input_gradient_node: input is not an ancestor of the scalar");
    return result;
  }

  static std::string op_name(Op op) {
    switch (op) {
      case Op::tanh_fn: return "tanh";
      case Op::sigmoid_fn: return "sigmoid";
      case Op::exp_fn: return "exp";
      case Op::softplus: return "softplus";
      case Op::rownorm: return "rownorm";
      case Op::rowsum: return "rowsum";
      case Op::sum_all: return "sum_all";
      case Op::mean_all: return "mean_all";
      case Op::assignment_w1: return "assignment_w1";
      default: return "op#" + std::to_string(static_cast<int>(op));
    }
  }

 private:
  const Tensor& t(Value v) const {
    return nodes_[static_cast<std::size_t>(v.id)].value;
  }
  Node& mut(Value v) { return nodes_[static_cast<std::size_t>(v.id)]; }

  void check(Value a, Value b) const {
    if (a.graph != this || b.graph != this)
      throw std::invalid_argument("graph: node belongs to another graph");
  }

  Value elementwise(Op op, Value a, Value b) {
    check(a, b);
    const Tensor &ta = t(a), &tb = t(b);
    if (!ta.same_shape(tb))
      throw std::invalid_argument("graph: elementwise shape mismatch");
    Tensor out = ta;
    switch (op) {
      case Op::add:
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += tb.values[i];
        break;
      case Op::sub:
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= tb.values[i];
        break;
      case Op::mul:
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= tb.values[i];
        break;
      default:
        throw std::invalid_argument("graph: bad elementwise op");
    }
    return emplace(op, std::move(out), a.id, b.id);
  }

  Value emplace(Op op, Tensor value, int in0 = -1, int in1 = -1) {
    if (!value.all_finite())
      throw std::runtime_error("graph: non-finite values produced by " +
                               op_name(op) + " (node " +
                               std::to_string(nodes_.size()) + ")");
    Node n;
    n.op = op;
    n.in = {in0, in1};
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
  }

  static void seed(Gradients& g, int id, Tensor t) {
    auto idx = static_cast<std::size_t>(id);
    if (g.present[idx]) {
      for (std::size_t i = 0; i < t.size(); ++i)
        g.adj[idx].values[i] += t.values[i];
    } else {
      g.adj[idx] = std::move(t);
      g.present[idx] = 1;
    }
  }

  void acc_into(Gradients& g, int id, const Tensor& shape_like,
                const std::vector<double>& contribution) {
    auto idx = static_cast<std::size_t>(id);
    if (!g.present[idx]) {
      g.adj[idx] = Tensor::zeros(shape_like.shape);
      g.present[idx] = 1;
    }
    for (std::size_t i = 0; i < contribution.size(); ++i)
      g.adj[idx].values[i] += contribution[i];
  }

  void vjp(Gradients& g, int id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& a = g.adj[static_cast<std::size_t>(id)];
    auto in_t = [&](int slot) -> const Tensor& {
      return nodes_[static_cast<std::size_t>(n.in[slot])].value;
    };
    auto ensure = [&](int slot) -> Tensor& {
      const int e = n.in[slot];
      auto idx = static_cast<std::size_t>(e);
      if (!g.present[idx]) {
        g.adj[idx] = Tensor::zeros(in_t(slot).shape);
        g.present[idx] = 1;
      }
      return g.adj[idx];
    };

    switch (n.op) {
      case Op::constant:
      case Op::parameter:
      case Op::input:
        return;
      case Op::matmul:  // C = A * B
        detail::mm_nt(a, in_t(1), ensure(0));
        detail::mm_tn(in_t(0), a, ensure(1));
        return;
      case Op::matmul_nt:  // C = A * B^T
        detail::mm_nn(a, in_t(1), ensure(0));
        detail::mm_tn(a, in_t(0), ensure(1));
        return;
      case Op::matmul_tn:  // C = A^T * B
        detail::mm_nt(in_t(1), a, ensure(0));
        detail::mm_nn(in_t(0), a, ensure(1));
        return;
      case Op::add: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i) g0.values[i] += a.values[i];
        Tensor& g1 = ensure(1);
        for (std::size_t i = 0; i < a.size(); ++i) g1.values[i] += a.values[i];
        return;
      }
      case Op::sub: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i) g0.values[i] += a.values[i];
        Tensor& g1 = ensure(1);
        for (std::size_t i = 0; i < a.size(); ++i) g1.values[i] -= a.values[i];
        return;
      }
      case Op::mul: {
        const Tensor &x = in_t(0), &y = in_t(1);
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          g0.values[i] += a.values[i] * y.values[i];
        Tensor& g1 = ensure(1);
        for (std::size_t i = 0; i < a.size(); ++i)
          g1.values[i] += a.values[i] * x.values[i];
        return;
      }
      case Op::neg: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i) g0.values[i] -= a.values[i];
        return;
      }
      case Op::add_rowvec: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i) g0.values[i] += a.values[i];
        Tensor& g1 = ensure(1);
        const std::size_t cols = in_t(1).shape[0];
        for (std::size_t i = 0; i < a.size(); ++i)
          g1.values[i % cols] += a.values[i];
        return;
      }
      case Op::scalar_mul: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          g0.values[i] += n.a0 * a.values[i];
        return;
      }
      case Op::scalar_add: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i) g0.values[i] += a.values[i];
        return;
      }
      case Op::relu: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          if (x.values[i] > 0.0) g0.values[i] += a.values[i];
        return;
      }
      case Op::leaky_relu: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          g0.values[i] += a.values[i] * (x.values[i] > 0.0 ? 1.0 : n.a0);
        return;
      }
      case Op::tanh_fn: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          g0.values[i] += a.values[i] * (1.0 - n.value.values[i] * n.value.values[i]);
        return;
      }
      case Op::sigmoid_fn: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double y = n.value.values[i];
          g0.values[i] += a.values[i] * y * (1.0 - y);
        }
        return;
      }
      case Op::act_mask:
        return;  // piecewise constant in its input
      case Op::square: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          g0.values[i] += 2.0 * x.values[i] * a.values[i];
        return;
      }
      case Op::exp_fn: {
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          g0.values[i] += a.values[i] * n.value.values[i];
        return;
      }
      case Op::softplus: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          g0.values[i] += a.values[i] / (1.0 + std::exp(-x.values[i]));
        return;
      }
      case Op::rownorm: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        const std::size_t cols = x.cols();
        for (std::size_t r = 0; r < x.rows(); ++r) {
          const double norm = n.value.values[r];
          if (norm < 1e-300) continue;  // subgradient 0 at the origin
          const double scale = a.values[r] / norm;
          for (std::size_t c = 0; c < cols; ++c)
            g0.values[r * cols + c] += scale * x.values[r * cols + c];
        }
        return;
      }
      case Op::rowsum: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        const std::size_t cols = x.cols();
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < cols; ++c)
            g0.values[r * cols + c] += a.values[r];
        return;
      }
      case Op::sum_all: {
        Tensor& g0 = ensure(0);
        for (auto& v : g0.values) v += a.values[0];
        return;
      }
      case Op::mean_all: {
        Tensor& g0 = ensure(0);
        const double s = a.values[0] / static_cast<double>(g0.size());
        for (auto& v : g0.values) v += s;
        return;
      }
      case Op::concat_cols: {
        const Tensor &x = in_t(0), &y = in_t(1);
        Tensor& g0 = ensure(0);
        Tensor& g1 = ensure(1);
        const std::size_t ca = x.cols(), cb = y.cols();
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t c = 0; c < ca; ++c)
            g0.values[r * ca + c] += a.values[r * (ca + cb) + c];
          for (std::size_t c = 0; c < cb; ++c)
            g1.values[r * cb + c] += a.values[r * (ca + cb) + ca + c];
        }
        return;
      }
      case Op::slice_cols: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        const auto c0 = static_cast<std::size_t>(n.a0);
        const std::size_t w = a.cols(), cols = x.cols();
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c)
            g0.values[r * cols + c0 + c] += a.values[r * w + c];
        return;
      }
      case Op::pad_cols: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        const auto c0 = static_cast<std::size_t>(n.a0);
        const std::size_t w = x.cols(), total = a.cols();
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c)
            g0.values[r * w + c] += a.values[r * total + c0 + c];
        return;
      }
      case Op::assignment_w1: {
        const Tensor& x = in_t(0);
        Tensor& g0 = ensure(0);
        const std::size_t cols = x.cols(), rows = x.rows();
        const double up = a.values[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          double norm = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = x.at(r, c) - n.aux.at(n.match[r], c);
            norm += d * d;
          }
          norm = std::sqrt(norm);
          if (norm < 1e-300) continue;
          for (std::size_t c = 0; c < cols; ++c)
            g0.values[r * cols + c] +=
                up * (x.at(r, c) - n.aux.at(n.match[r], c)) / norm;
        }
        return;
      }
    }
  }

  std::vector<Node> nodes_;

  friend struct Value;
};

inline const Tensor& Value::tensor() const {
  return graph->node(id).value;
}

}  // namespace lsdm::nn
