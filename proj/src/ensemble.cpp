#include "softtree/ensemble.hpp"

#include <cmath>
#include <string>

#include "softtree/error.hpp"
#include "softtree/rng.hpp"

namespace softtree {

namespace {

// Index arithmetic for the node-major layouts documented in the header.
struct Layout {
  int internal, leaves, nodes, split_tasks, tasks, trees, heads, features;
  std::size_t batch;

  explicit Layout(const EnsembleConfig& cfg, std::size_t b)
      : internal(cfg.internal_nodes()),
        leaves(cfg.leaf_nodes()),
        nodes(cfg.total_nodes()),
        split_tasks(cfg.split_tasks()),
        tasks(cfg.tasks),
        trees(cfg.trees),
        heads(cfg.heads),
        features(cfg.features),
        batch(b) {}

  std::size_t w(int i, int ts) const {
    return (static_cast<std::size_t>(i) * split_tasks + ts) *
           static_cast<std::size_t>(features) * trees;
  }
  std::size_t o(int leaf, int t) const {
    return (static_cast<std::size_t>(leaf) * tasks + t) *
           static_cast<std::size_t>(trees) * heads;
  }
  std::size_t a(int i, int ts, std::size_t b) const {
    return ((static_cast<std::size_t>(i) * split_tasks + ts) * batch + b) * trees;
  }
  std::size_t rho(int node, int ts, std::size_t b) const {
    return ((static_cast<std::size_t>(node) * split_tasks + ts) * batch + b) * trees;
  }
  std::size_t v(int i, int t, std::size_t b) const {
    return ((static_cast<std::size_t>(i) * tasks + t) * batch + b) *
           static_cast<std::size_t>(trees) * heads;
  }
  std::size_t g(std::size_t b, int t) const {
    return (b * tasks + t) * heads;
  }
};

void check_forward_inputs(const EnsembleConfig& cfg, const EnsembleParams& params,
                          const Array& X) {
  cfg.validate();
  params.check_shapes(cfg);
  if (X.rank() != 2 || X.extent(1) != static_cast<std::size_t>(cfg.features)) {
    throw ShapeError("forward: X is " + shape_string(X) + ", expected [B x " +
                     std::to_string(cfg.features) + "]");
  }
  if (!X.all_finite()) {
    throw NumericError("forward: non-finite input features");
  }
}

}  // namespace

void EnsembleConfig::validate() const {
  if (trees < 1 || depth < 1 || features < 1 || heads < 1 || tasks < 1) {
    throw Error("ensemble config: trees/depth/features/heads/tasks must be positive");
  }
  if (depth > 25) {
    throw Error("ensemble config: depth " + std::to_string(depth) + " is not supported");
  }
  activation.validate();
}

void EnsembleParams::check_shapes(const EnsembleConfig& cfg) const {
  const std::vector<std::size_t> want_w = {
      static_cast<std::size_t>(cfg.internal_nodes()),
      static_cast<std::size_t>(cfg.split_tasks()),
      static_cast<std::size_t>(cfg.features),
      static_cast<std::size_t>(cfg.trees)};
  const std::vector<std::size_t> want_o = {
      static_cast<std::size_t>(cfg.leaf_nodes()),
      static_cast<std::size_t>(cfg.tasks),
      static_cast<std::size_t>(cfg.trees),
      static_cast<std::size_t>(cfg.heads)};
  if (split_weights.shape() != want_w) {
    throw ShapeError("split_weights is " + shape_string(split_weights) +
                     ", expected " + shape_string(want_w));
  }
  if (leaf_weights.shape() != want_o) {
    throw ShapeError("leaf_weights is " + shape_string(leaf_weights) +
                     ", expected " + shape_string(want_o));
  }
}

EnsembleParams zero_params(const EnsembleConfig& cfg) {
  EnsembleParams p;
  p.split_weights = Array({static_cast<std::size_t>(cfg.internal_nodes()),
                           static_cast<std::size_t>(cfg.split_tasks()),
                           static_cast<std::size_t>(cfg.features),
                           static_cast<std::size_t>(cfg.trees)});
  p.leaf_weights = Array({static_cast<std::size_t>(cfg.leaf_nodes()),
                          static_cast<std::size_t>(cfg.tasks),
                          static_cast<std::size_t>(cfg.trees),
                          static_cast<std::size_t>(cfg.heads)});
  return p;
}

EnsembleParams init_params(const EnsembleConfig& cfg, std::uint64_t seed,
                           std::uint64_t stream_salt) {
  cfg.validate();
  EnsembleParams params = zero_params(cfg);
  const double half_range = 0.5 * cfg.activation.gamma / std::sqrt(static_cast<double>(cfg.features));
  const Rng rng = Rng(seed, streams::kInit).substream(stream_salt);
  const std::size_t internal = cfg.internal_nodes();
  const std::size_t p = cfg.features, m = cfg.trees;
  double* w = params.split_weights.data();
  // Draws addressed task-major so task t's slice does not depend on the
  // number of tasks in the config.
  for (std::size_t ts = 0; ts < static_cast<std::size_t>(cfg.split_tasks()); ++ts) {
    for (std::size_t i = 0; i < internal; ++i) {
      for (std::size_t f = 0; f < p; ++f) {
        for (std::size_t j = 0; j < m; ++j) {
          const std::uint64_t counter = ((ts * internal + i) * p + f) * m + j;
          w[((i * cfg.split_tasks() + ts) * p + f) * m + j] =
              rng.uniform_at(counter, -half_range, half_range);
        }
      }
    }
  }
  return params;
}

double ForwardTrace::value_at(const EnsembleConfig& cfg, const EnsembleParams& params,
                              int node, int t, std::size_t b, int j, int k) const {
  const int internal = cfg.internal_nodes();
  if (node < internal) {
    return values[(((static_cast<std::size_t>(node) * tasks + t) * batch + b) * trees + j) * heads + k];
  }
  const int leaf = node - internal;
  return params.leaf_weights(static_cast<std::size_t>(leaf), static_cast<std::size_t>(t),
                             static_cast<std::size_t>(j), static_cast<std::size_t>(k));
}

namespace {

// Shared routing sweep: fills pre-activations, reach probabilities and
// visited flags top-down, skipping rows whose reach is identically zero.
void route(const EnsembleConfig& cfg, const EnsembleParams& params, const Array& X,
           const Layout& lay, Array& a, Array& rho, std::vector<std::uint8_t>& visited) {
  const Activation& act = cfg.activation;
  const double* x = X.data();
  const double* w = params.split_weights.data();
  double* ap = a.data();
  double* rp = rho.data();

  for (std::size_t b = 0; b < lay.batch; ++b) visited[b] = 1;
  for (int ts = 0; ts < lay.split_tasks; ++ts) {
    double* root = rp + lay.rho(0, ts, 0);
    for (std::size_t i = 0; i < lay.batch * lay.trees; ++i) root[i] = 1.0;
  }

  for (int i = 0; i < lay.internal; ++i) {
    const int lc = left_child(i), rc = right_child(i);
    std::uint8_t* vis_l = visited.data() + static_cast<std::size_t>(lc) * lay.batch;
    std::uint8_t* vis_r = visited.data() + static_cast<std::size_t>(rc) * lay.batch;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      if (!visited[static_cast<std::size_t>(i) * lay.batch + b]) continue;
      bool any_left = false, any_right = false;
      for (int ts = 0; ts < lay.split_tasks; ++ts) {
        double* arow = ap + lay.a(i, ts, b);
        matvec_into(std::span<const double>(w + lay.w(i, ts),
                                            static_cast<std::size_t>(lay.features) * lay.trees),
                    lay.features, lay.trees,
                    std::span<const double>(x + b * lay.features, lay.features),
                    std::span<double>(arow, lay.trees));
        const double* rrow = rp + lay.rho(i, ts, b);
        double* lrow = rp + lay.rho(lc, ts, b);
        double* rrow_out = rp + lay.rho(rc, ts, b);
        for (int j = 0; j < lay.trees; ++j) {
          const double s = act.eval(arow[j]);
          const double rl = rrow[j] * s;
          const double rr = rrow[j] * (1.0 - s);
          lrow[j] = rl;
          rrow_out[j] = rr;
          any_left |= (rl != 0.0);
          any_right |= (rr != 0.0);
        }
      }
      vis_l[b] = any_left ? 1 : 0;
      vis_r[b] = any_right ? 1 : 0;
    }
  }
}

}  // namespace

ForwardResult forward(const EnsembleConfig& cfg, const EnsembleParams& params,
                      const Array& X, bool want_trace) {
  check_forward_inputs(cfg, params, X);
  const Layout lay(cfg, X.extent(0));

  ForwardResult result;
  result.predictions = Array({lay.batch, static_cast<std::size_t>(lay.tasks),
                              static_cast<std::size_t>(lay.heads)});

  Array a({static_cast<std::size_t>(lay.internal), static_cast<std::size_t>(lay.split_tasks),
           lay.batch, static_cast<std::size_t>(lay.trees)});
  Array rho({static_cast<std::size_t>(lay.nodes), static_cast<std::size_t>(lay.split_tasks),
             lay.batch, static_cast<std::size_t>(lay.trees)});
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(lay.nodes) * lay.batch, 0);
  route(cfg, params, X, lay, a, rho, visited);

  const double* o = params.leaf_weights.data();
  double* pred = result.predictions.data();

  if (!want_trace) {
    // Prediction only: expectation over leaves, no subtree values kept.
    for (int leaf = 0; leaf < lay.leaves; ++leaf) {
      const int node = lay.internal + leaf;
      for (std::size_t b = 0; b < lay.batch; ++b) {
        if (!visited[static_cast<std::size_t>(node) * lay.batch + b]) continue;
        for (int t = 0; t < lay.tasks; ++t) {
          const int ts = cfg.share_splits ? 0 : t;
          const double* rrow = rho.data() + lay.rho(node, ts, b);
          const double* orow = o + lay.o(leaf, t);
          double* out = pred + lay.g(b, t);
          for (int j = 0; j < lay.trees; ++j) {
            const double r = rrow[j];
            if (r == 0.0) continue;
            for (int k = 0; k < lay.heads; ++k) out[k] += r * orow[static_cast<std::size_t>(j) * lay.heads + k];
          }
        }
      }
    }
    return result;
  }

  Array values({static_cast<std::size_t>(lay.internal), static_cast<std::size_t>(lay.tasks),
                lay.batch, static_cast<std::size_t>(lay.trees), static_cast<std::size_t>(lay.heads)});
  const double* ap = a.data();
  double* vp = values.data();
  const Activation& act = cfg.activation;

  // Bottom-up subtree values: v_i = S(a_i) v_left + (1 - S(a_i)) v_right.
  for (int i = lay.internal - 1; i >= 0; --i) {
    const int lc = left_child(i), rc = right_child(i);
    const bool leaf_children = lc >= lay.internal;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      if (!visited[static_cast<std::size_t>(i) * lay.batch + b]) continue;
      for (int t = 0; t < lay.tasks; ++t) {
        const int ts = cfg.share_splits ? 0 : t;
        const double* arow = ap + lay.a(i, ts, b);
        double* vout = vp + lay.v(i, t, b);
        const double* vl = leaf_children ? o + lay.o(lc - lay.internal, t) : vp + lay.v(lc, t, b);
        const double* vr = leaf_children ? o + lay.o(rc - lay.internal, t) : vp + lay.v(rc, t, b);
        for (int j = 0; j < lay.trees; ++j) {
          const double s = act.eval(arow[j]);
          const std::size_t jk = static_cast<std::size_t>(j) * lay.heads;
          for (int k = 0; k < lay.heads; ++k) {
            vout[jk + k] = s * vl[jk + k] + (1.0 - s) * vr[jk + k];
          }
        }
      }
    }
  }

  for (std::size_t b = 0; b < lay.batch; ++b) {
    for (int t = 0; t < lay.tasks; ++t) {
      const double* vroot = vp + lay.v(0, t, b);
      double* out = pred + lay.g(b, t);
      for (int j = 0; j < lay.trees; ++j) {
        for (int k = 0; k < lay.heads; ++k) out[k] += vroot[static_cast<std::size_t>(j) * lay.heads + k];
      }
    }
  }

  result.trace.batch = static_cast<int>(lay.batch);
  result.trace.depth = cfg.depth;
  result.trace.tasks = lay.tasks;
  result.trace.split_tasks = lay.split_tasks;
  result.trace.trees = lay.trees;
  result.trace.heads = lay.heads;
  result.trace.pre_activations = std::move(a);
  result.trace.reach = std::move(rho);
  result.trace.values = std::move(values);
  result.trace.visited = std::move(visited);
  return result;
}

EnsembleParams backward(const EnsembleConfig& cfg, const EnsembleParams& params,
                        const ForwardTrace& trace, const Array& X,
                        const Array& output_grads) {
  check_forward_inputs(cfg, params, X);
  const Layout lay(cfg, X.extent(0));
  if (trace.empty() || trace.batch != static_cast<int>(lay.batch) ||
      trace.depth != cfg.depth || trace.tasks != lay.tasks ||
      trace.split_tasks != lay.split_tasks || trace.trees != lay.trees ||
      trace.heads != lay.heads) {
    throw ShapeError("backward: stale trace (dims do not match config/batch)");
  }
  const std::vector<std::size_t> want_g = {lay.batch, static_cast<std::size_t>(lay.tasks),
                                           static_cast<std::size_t>(lay.heads)};
  if (output_grads.shape() != want_g) {
    throw ShapeError("backward: output_grads is " + shape_string(output_grads) +
                     ", expected " + shape_string(want_g));
  }

  EnsembleParams grads = zero_params(cfg);
  const Activation& act = cfg.activation;
  const double* x = X.data();
  const double* o = params.leaf_weights.data();
  const double* ap = trace.pre_activations.data();
  const double* rp = trace.reach.data();
  const double* vp = trace.values.data();
  const double* g = output_grads.data();
  double* gw = grads.split_weights.data();
  double* go = grads.leaf_weights.data();

  std::vector<double> da(static_cast<std::size_t>(lay.split_tasks) * lay.trees);

  for (int i = 0; i < lay.internal; ++i) {
    const int lc = left_child(i), rc = right_child(i);
    const bool leaf_children = lc >= lay.internal;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      if (!trace.visited[static_cast<std::size_t>(i) * lay.batch + b]) continue;
      bool any = false;
      for (int ts = 0; ts < lay.split_tasks; ++ts) {
        const double* arow = ap + lay.a(i, ts, b);
        const double* rrow = rp + lay.rho(i, ts, b);
        double* darow = da.data() + static_cast<std::size_t>(ts) * lay.trees;
        for (int j = 0; j < lay.trees; ++j) {
          const double r = rrow[j];
          const double sp = act.deriv(arow[j]);
          if (r == 0.0 || sp == 0.0) {
            darow[j] = 0.0;
            continue;
          }
          // d loss / d a = rho * S'(a) * sum_k (v_left - v_right) g.
          double acc = 0.0;
          const std::size_t jk = static_cast<std::size_t>(j) * lay.heads;
          if (cfg.share_splits) {
            for (int t = 0; t < lay.tasks; ++t) {
              const double* vl = leaf_children ? o + lay.o(lc - lay.internal, t) : vp + lay.v(lc, t, b);
              const double* vr = leaf_children ? o + lay.o(rc - lay.internal, t) : vp + lay.v(rc, t, b);
              const double* grow = g + lay.g(b, t);
              for (int k = 0; k < lay.heads; ++k) acc += (vl[jk + k] - vr[jk + k]) * grow[k];
            }
          } else {
            const int t = ts;
            const double* vl = leaf_children ? o + lay.o(lc - lay.internal, t) : vp + lay.v(lc, t, b);
            const double* vr = leaf_children ? o + lay.o(rc - lay.internal, t) : vp + lay.v(rc, t, b);
            const double* grow = g + lay.g(b, t);
            for (int k = 0; k < lay.heads; ++k) acc += (vl[jk + k] - vr[jk + k]) * grow[k];
          }
          const double v = r * sp * acc;
          darow[j] = v;
          any |= (v != 0.0);
        }
      }
      if (!any) continue;
      const double* xrow = x + b * lay.features;
      for (int ts = 0; ts < lay.split_tasks; ++ts) {
        const double* darow = da.data() + static_cast<std::size_t>(ts) * lay.trees;
        double* gw_node = gw + lay.w(i, ts);
        for (int f = 0; f < lay.features; ++f) {
          const double xf = xrow[f];
          if (xf == 0.0) continue;
          double* gw_row = gw_node + static_cast<std::size_t>(f) * lay.trees;
          for (int j = 0; j < lay.trees; ++j) gw_row[j] += darow[j] * xf;
        }
      }
    }
  }

  for (int leaf = 0; leaf < lay.leaves; ++leaf) {
    const int node = lay.internal + leaf;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      if (!trace.visited[static_cast<std::size_t>(node) * lay.batch + b]) continue;
      for (int t = 0; t < lay.tasks; ++t) {
        const int ts = cfg.share_splits ? 0 : t;
        const double* rrow = rp + lay.rho(node, ts, b);
        const double* grow = g + lay.g(b, t);
        double* go_row = go + lay.o(leaf, t);
        for (int j = 0; j < lay.trees; ++j) {
          const double r = rrow[j];
          if (r == 0.0) continue;
          for (int k = 0; k < lay.heads; ++k) go_row[static_cast<std::size_t>(j) * lay.heads + k] += r * grow[k];
        }
      }
    }
  }

  return grads;
}

Array oracle_forward(const EnsembleConfig& cfg, const EnsembleParams& params,
                     const Array& x) {
  cfg.validate();
  params.check_shapes(cfg);
  if (x.rank() != 1 || x.extent(0) != static_cast<std::size_t>(cfg.features)) {
    throw ShapeError("oracle_forward: x is " + shape_string(x) + ", expected [" +
                     std::to_string(cfg.features) + "]");
  }
  const Layout lay(cfg, 1);
  const Activation& act = cfg.activation;
  Array out({static_cast<std::size_t>(cfg.tasks), static_cast<std::size_t>(cfg.heads)});
  const double* w = params.split_weights.data();
  const double* o = params.leaf_weights.data();

  for (int j = 0; j < cfg.trees; ++j) {
    for (int t = 0; t < cfg.tasks; ++t) {
      const int ts = cfg.share_splits ? 0 : t;
      for (int leaf = 0; leaf < lay.leaves; ++leaf) {
        // Probability of reaching this leaf: product of routing
        // probabilities along the root path.
        double prob = 1.0;
        int node = lay.internal + leaf;
        while (node > 0) {
          const int par = parent_node(node);
          double pre = 0.0;
          for (int f = 0; f < cfg.features; ++f) {
            pre += w[lay.w(par, ts) + static_cast<std::size_t>(f) * cfg.trees + j] * x[f];
          }
          const double s = act.eval(pre);
          prob *= (node == left_child(par)) ? s : (1.0 - s);
          node = par;
        }
        if (prob == 0.0) continue;
        const double* orow = o + lay.o(leaf, t);
        for (int k = 0; k < cfg.heads; ++k) {
          out(t, k) += prob * orow[static_cast<std::size_t>(j) * cfg.heads + k];
        }
      }
    }
  }
  return out;
}

}  // namespace softtree
