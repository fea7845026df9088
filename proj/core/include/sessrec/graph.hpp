#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sessrec/array.hpp"

namespace sessrec::ad {

// A named trainable tensor. Storage lives here for the whole life of a model;
// graphs only reference it. The same Parameter may back several graph uses
// (weight tying): gradients from every use accumulate into `grad`.
template <typename T>
struct Parameter {
  std::string name;
  Array<T> value;
  Array<T> grad;  // same shape as value, zeroed by the optimizer after a step

  Parameter() = default;
  Parameter(std::string n, Array<T> v) : name(std::move(n)), value(std::move(v)) {
    grad = Array<T>::zeros(value.shape);
  }
};

// Reverse-mode tape. Operations append nodes; backward() walks the tape in
// reverse creation order, which is a valid topological order by construction.
// A Graph instance is confined to one thread and cleared (destroyed) per step.
template <typename T>
class Graph {
 public:
  using NodeId = std::int32_t;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // When disabled, no backward closures are recorded (forward-only inference).
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }

  // Constant leaf, no gradient.
  NodeId input(Array<T> value);

  // Trainable leaf. Repeated calls with the same Parameter return the same
  // node, so tied weights are a single tape node with many consumers.
  NodeId param(Parameter<T>& p);

  // y = x * W + b with x [n x a], W [a x b], b [1 x b].
  NodeId linear(NodeId x, NodeId w, NodeId b);

  NodeId matmul(NodeId a, NodeId b);     // [n x k] * [k x m]
  NodeId matmul_nt(NodeId a, NodeId b);  // [n x k] * [m x k]^T -> [n x m]

  // Row gather: out[i] = table[ids[i]].
  NodeId embedding(NodeId table, std::vector<std::int32_t> ids);

  // Per-row layer normalization over the last axis, epsilon 1e-5.
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias);

  // Per-row L2 normalization. A zero row maps to a zero row with zero
  // gradient (the singularity is defined away rather than NaN-ing).
  NodeId l2_normalize(NodeId x);

  NodeId add(NodeId a, NodeId b);  // same shape
  NodeId mul(NodeId a, NodeId b);  // elementwise, same shape
  NodeId scale(NodeId x, T s);
  NodeId add_const(NodeId x, T c);

  // [n x d] + [1 x d] broadcast over rows.
  NodeId add_row_broadcast(NodeId x, NodeId row);

  NodeId concat_cols(const std::vector<NodeId>& xs);
  NodeId slice_cols(NodeId x, std::int64_t start, std::int64_t len);

  // Mean over rows: [n x d] -> [1 x d].
  NodeId mean_rows(NodeId x);

  // Row-wise softmax with an optional additive mask (0 = allowed,
  // -infinity = blocked; blocked entries get exactly zero weight).
  // Accumulation is in double even for T = float.
  NodeId softmax_rows(NodeId x, const Array<T>* mask = nullptr);

  NodeId gelu(NodeId x);

  // Sum of negative log-likelihoods over rows whose target != ignore_id.
  // Returns a [1 x 1] node; n_targets receives the non-ignored count.
  // Throws if every position is ignored.
  NodeId cross_entropy_sum(NodeId logits, const std::vector<std::int32_t>& targets,
                           std::int32_t ignore_id, std::int64_t* n_targets = nullptr);

  // Mean NLL over non-ignored rows (cross_entropy_sum scaled by 1/count).
  NodeId cross_entropy_mean(NodeId logits, const std::vector<std::int32_t>& targets,
                            std::int32_t ignore_id);

  const Array<T>& value(NodeId id) const { return nodes_[id].value; }
  const Array<T>& grad(NodeId id) const { return nodes_[id].grad; }
  bool requires_grad(NodeId id) const { return nodes_[id].needs_grad; }

  // Reverse pass from a [1 x 1] loss node, seeding with d(loss)/d(loss) = 1.
  // Parameter gradients accumulate into Parameter::grad.
  void backward(NodeId loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Array<T> value;
    Array<T> grad;
    bool needs_grad = false;
    std::function<void(Graph&)> back;  // empty for leaves/constants
    Parameter<T>* bound = nullptr;     // set for param leaves
  };

  NodeId push(Array<T> value, bool needs, std::function<void(Graph&)> back);
  Array<T>& grad_buf(NodeId id);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, NodeId> param_nodes_;
  bool grad_enabled_ = true;
};

// Additive attention masks. Entries are 0 (allowed) or -infinity (blocked).
template <typename T>
Array<T> causal_mask(std::int64_t n);
template <typename T>
Array<T> full_mask(std::int64_t n);

// Rows with every entry blocked fall back to attending the position itself.
template <typename T>
void fix_all_blocked_rows(Array<T>& mask);

// The key projection carries no bias: softmax is invariant to per-row
// constant shifts, so a key bias would be dead weight with an exactly zero
// gradient.
template <typename T>
struct AttentionParams {
  typename Graph<T>::NodeId wq, bq, wk, wv, bv, wo, bo;
};

// Scaled dot-product multi-head self-attention composed from primitives.
// x is [seq x d]; mask is [seq x seq] additive. d must divide by heads.
template <typename T>
typename Graph<T>::NodeId multi_head_attention(Graph<T>& g, typename Graph<T>::NodeId x,
                                               const Array<T>& mask,
                                               const AttentionParams<T>& p, int heads);

}  // namespace sessrec::ad
