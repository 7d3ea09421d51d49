#include "softtree/reference.hpp"

#include <vector>

#include "softtree/error.hpp"

namespace softtree {

Array per_tree_forward(const EnsembleConfig& cfg, const EnsembleParams& params,
                       const Array& X) {
  const std::size_t batch = X.extent(0);
  Array out({batch, static_cast<std::size_t>(cfg.tasks), static_cast<std::size_t>(cfg.heads)});
  for (std::size_t b = 0; b < batch; ++b) {
    Array row({static_cast<std::size_t>(cfg.features)});
    for (int f = 0; f < cfg.features; ++f) row[f] = X(b, static_cast<std::size_t>(f));
    const Array pred = oracle_forward(cfg, params, row);
    for (int t = 0; t < cfg.tasks; ++t) {
      for (int k = 0; k < cfg.heads; ++k) {
        out(b, static_cast<std::size_t>(t), static_cast<std::size_t>(k)) =
            pred(static_cast<std::size_t>(t), static_cast<std::size_t>(k));
      }
    }
  }
  return out;
}

EnsembleParams per_tree_backward(const EnsembleConfig& cfg, const EnsembleParams& params,
                                 const Array& X, const Array& output_grads) {
  cfg.validate();
  params.check_shapes(cfg);
  const std::size_t batch = X.extent(0);
  const int internal = cfg.internal_nodes();
  const int leaves = cfg.leaf_nodes();
  const Activation& act = cfg.activation;
  EnsembleParams grads = zero_params(cfg);

  const int m = cfg.trees, p = cfg.features, heads = cfg.heads;
  std::vector<int> path(cfg.depth);      // ancestors of the current leaf, root last
  std::vector<double> route(cfg.depth);  // routing probability taken at each ancestor
  std::vector<double> deriv_sign(cfg.depth);

  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = X.data() + b * p;
    for (int j = 0; j < m; ++j) {
      for (int t = 0; t < cfg.tasks; ++t) {
        const int ts = cfg.share_splits ? 0 : t;
        const double* g = output_grads.data() +
                          (b * cfg.tasks + t) * static_cast<std::size_t>(heads);
        for (int leaf = 0; leaf < leaves; ++leaf) {
          int node = internal + leaf;
          int steps = 0;
          while (node > 0) {
            const int par = parent_node(node);
            double pre = 0.0;
            for (int f = 0; f < p; ++f) {
              pre += params.split_weights(static_cast<std::size_t>(par), static_cast<std::size_t>(ts),
                                          static_cast<std::size_t>(f), static_cast<std::size_t>(j)) * x[f];
            }
            const double s = act.eval(pre);
            const bool went_left = (node == left_child(par));
            path[steps] = par;
            route[steps] = went_left ? s : (1.0 - s);
            deriv_sign[steps] = (went_left ? 1.0 : -1.0) * act.deriv(pre);
            node = par;
            ++steps;
          }
          double prob = 1.0;
          for (int sidx = 0; sidx < steps; ++sidx) prob *= route[sidx];
          double value_grad = 0.0;  // o_l . g
          for (int k = 0; k < heads; ++k) {
            value_grad += params.leaf_weights(static_cast<std::size_t>(leaf), static_cast<std::size_t>(t),
                                              static_cast<std::size_t>(j), static_cast<std::size_t>(k)) * g[k];
          }
          if (prob != 0.0) {
            for (int k = 0; k < heads; ++k) {
              grads.leaf_weights(static_cast<std::size_t>(leaf), static_cast<std::size_t>(t),
                                 static_cast<std::size_t>(j), static_cast<std::size_t>(k)) += prob * g[k];
            }
          }
          if (value_grad == 0.0) continue;
          for (int sidx = 0; sidx < steps; ++sidx) {
            if (deriv_sign[sidx] == 0.0) continue;
            double excl = 1.0;  // product over the other ancestors
            for (int other = 0; other < steps; ++other) {
              if (other != sidx) excl *= route[other];
            }
            const double da = deriv_sign[sidx] * excl * value_grad;
            if (da == 0.0) continue;
            const int i = path[sidx];
            for (int f = 0; f < p; ++f) {
              grads.split_weights(static_cast<std::size_t>(i), static_cast<std::size_t>(ts),
                                  static_cast<std::size_t>(f), static_cast<std::size_t>(j)) += da * x[f];
            }
          }
        }
      }
    }
  }
  return grads;
}

}  // namespace softtree
