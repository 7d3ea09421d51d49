#pragma once

#include <cstdint>
#include <vector>

#include "softtree/activation.hpp"
#include "softtree/array.hpp"

namespace softtree {

// Heap layout of the perfect binary tree: root 0, children of i are
// 2i+1 / 2i+2, nodes below 2^d - 1 are internal, the rest are leaves.
inline int left_child(int i) { return 2 * i + 1; }
inline int right_child(int i) { return 2 * i + 2; }
inline int parent_node(int i) { return (i - 1) / 2; }

inline int node_depth(int i) {
  int d = 0;
  while (i > 0) {
    i = parent_node(i);
    ++d;
  }
  return d;
}

struct EnsembleConfig {
  int trees = 1;     // m
  int depth = 1;     // d
  int features = 1;  // p
  int heads = 1;     // k, output dimension per task
  int tasks = 1;     // T
  bool share_splits = false;  // one split tensor shared by all tasks
  Activation activation{};

  int internal_nodes() const { return (1 << depth) - 1; }
  int leaf_nodes() const { return 1 << depth; }
  int total_nodes() const { return (1 << (depth + 1)) - 1; }
  // Task extent of the split tensor (1 when splits are shared).
  int split_tasks() const { return share_splits ? 1 : tasks; }

  void validate() const;
};

// All trainable weights. split_weights is [I x Ts x p x m] (slice
// [i,t,:,:] is task t's hyperplane matrix at supernode i); leaf_weights
// is [L x T x m x k]. The same struct doubles as the gradient container.
struct EnsembleParams {
  Array split_weights;
  Array leaf_weights;

  void check_shapes(const EnsembleConfig& cfg) const;
};

EnsembleParams zero_params(const EnsembleConfig& cfg);

// Split weights i.i.d. uniform on [-gamma/(2 sqrt p), +gamma/(2 sqrt p)],
// leaf weights zero. Draws are addressed by (task, node, feature, tree),
// so a task's slice is independent of how many tasks the config has.
// stream_salt separates parameter blocks of multi-block models.
EnsembleParams init_params(const EnsembleConfig& cfg, std::uint64_t seed,
                           std::uint64_t stream_salt = 0);

// Everything the backward pass needs, for a whole batch. Layouts are
// node-major so the per-node kernels stream contiguously:
//   pre_activations  [I  x Ts x B x m]
//   reach            [N  x Ts x B x m]   (N = all nodes, root included)
//   values           [I  x T  x B x m x k]  (leaf values are the leaf weights)
//   visited          [N  x B]            (any nonzero reach at the node)
struct ForwardTrace {
  int batch = 0;
  int depth = 0;
  int tasks = 0;
  int split_tasks = 0;
  int trees = 0;
  int heads = 0;
  Array pre_activations;
  Array reach;
  Array values;
  std::vector<std::uint8_t> visited;

  bool empty() const { return batch == 0; }
  bool visited_at(int node, std::size_t b) const {
    return visited[static_cast<std::size_t>(node) * batch + b] != 0;
  }
  double reach_at(int node, int ts, std::size_t b, int j) const {
    return reach[((static_cast<std::size_t>(node) * split_tasks + ts) * batch + b) * trees + j];
  }
  double pre_activation_at(int node, int ts, std::size_t b, int j) const {
    return pre_activations[((static_cast<std::size_t>(node) * split_tasks + ts) * batch + b) * trees + j];
  }
  // Subtree value at any node; reads leaf weights directly for leaves.
  double value_at(const EnsembleConfig& cfg, const EnsembleParams& params,
                  int node, int t, std::size_t b, int j, int k) const;
};

struct ForwardResult {
  Array predictions;  // [B x T x k]
  ForwardTrace trace;
};

// Supernode forward pass over a batch. Subtrees whose routing weight is
// exactly zero for every task/tree of a sample are skipped and left
// unvisited in the trace. Pass want_trace=false for prediction-only use.
ForwardResult forward(const EnsembleConfig& cfg, const EnsembleParams& params,
                      const Array& X, bool want_trace = true);

// Analytic gradients of the batch outputs contracted with output_grads
// [B x T x k]; summed over the batch in sample order.
EnsembleParams backward(const EnsembleConfig& cfg, const EnsembleParams& params,
                        const ForwardTrace& trace, const Array& X,
                        const Array& output_grads);

// Deliberately naive tree-by-tree scalar evaluation of a single sample:
// per-leaf routing products and expectation, summed over trees.
// Reference implementation used to validate the supernode path.
Array oracle_forward(const EnsembleConfig& cfg, const EnsembleParams& params,
                     const Array& x);

}  // namespace softtree
