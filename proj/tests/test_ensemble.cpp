#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "softtree/ensemble.hpp"
#include "softtree/error.hpp"
#include "softtree/objectives.hpp"
#include "softtree/reference.hpp"
#include "softtree/rng.hpp"
#include "support/gradcheck.hpp"

using namespace softtree;

namespace {

struct Instance {
  EnsembleConfig cfg;
  EnsembleParams params;
};

// Random ensemble with nonzero leaves and a mix of soft and saturated
// routing; pre-activations are kept away from the saturation boundary
// so finite differences stay clean.
Instance random_instance(Rng& rng, const Array& X, int max_trees = 8, int max_depth = 3,
                         int max_tasks = 2, int max_heads = 2, bool share = false) {
  Instance inst;
  inst.cfg.trees = 1 + static_cast<int>(rng.next_u64() % max_trees);
  inst.cfg.depth = 1 + static_cast<int>(rng.next_u64() % max_depth);
  inst.cfg.features = static_cast<int>(X.extent(1));
  inst.cfg.tasks = 1 + static_cast<int>(rng.next_u64() % max_tasks);
  inst.cfg.heads = 1 + static_cast<int>(rng.next_u64() % max_heads);
  inst.cfg.share_splits = share;

  for (int attempt = 0; attempt < 50; ++attempt) {
    inst.params = zero_params(inst.cfg);
    const double scale = rng.uniform(0.2, 1.2);
    for (double& v : inst.params.split_weights.values()) v = scale * rng.normal();
    bool near_boundary = false;
    const double half = 0.5 * inst.cfg.activation.gamma;
    const ForwardResult f = forward(inst.cfg, inst.params, X, true);
    for (double a : f.trace.pre_activations.values()) {
      if (std::abs(std::abs(a) - half) < 2e-3) near_boundary = true;
    }
    if (!near_boundary) break;
  }
  for (double& v : inst.params.leaf_weights.values()) v = rng.normal();
  return inst;
}

Array random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Array X({rows, cols});
  for (double& v : X.values()) v = rng.normal();
  return X;
}

}  // namespace

TEST_CASE("depth-1 tree with uniform routing averages its leaves") {
  EnsembleConfig cfg;
  cfg.trees = 1;
  cfg.depth = 1;
  cfg.features = 2;
  EnsembleParams params = zero_params(cfg);
  params.leaf_weights(0, 0, 0, 0) = 2.0;
  params.leaf_weights(1, 0, 0, 0) = 4.0;

  Array X({1, 2}, {0.3, -0.7});
  const ForwardResult f = forward(cfg, params, X);
  CHECK(f.predictions(0, 0, 0) == 3.0);

  Array x({2}, {0.3, -0.7});
  CHECK(oracle_forward(cfg, params, x)(0, 0) == 3.0);
}

TEST_CASE("saturated routing picks the left leaf exactly and skips the right subtree") {
  EnsembleConfig cfg;
  cfg.trees = 1;
  cfg.depth = 1;
  cfg.features = 1;
  EnsembleParams params = zero_params(cfg);
  params.split_weights(0, 0, 0, 0) = 10.0;  // w.x = 10 >= gamma/2
  params.leaf_weights(0, 0, 0, 0) = 2.0;
  params.leaf_weights(1, 0, 0, 0) = 4.0;

  Array X({1, 1}, {1.0});
  const ForwardResult f = forward(cfg, params, X);
  CHECK(f.predictions(0, 0, 0) == 2.0);
  CHECK(f.trace.visited_at(1, 0));
  CHECK_FALSE(f.trace.visited_at(2, 0));
  CHECK(f.trace.reach_at(1, 0, 0, 0) == 1.0);
  CHECK(f.trace.reach_at(2, 0, 0, 0) == 0.0);

  // Classical hard-routing evaluation via the oracle agrees.
  Array x({1}, {1.0});
  CHECK(oracle_forward(cfg, params, x)(0, 0) == 2.0);
}

TEST_CASE("supernode forward matches the per-tree oracle") {
  Rng rng(101, 21);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t p = 1 + rng.next_u64() % 5;
    const Array X = random_matrix(rng, 3, p);
    const Instance inst = random_instance(rng, X);
    const ForwardResult f = forward(inst.cfg, inst.params, X);
    for (std::size_t b = 0; b < 3; ++b) {
      Array x({p});
      for (std::size_t c = 0; c < p; ++c) x[c] = X(b, c);
      const Array expect = oracle_forward(inst.cfg, inst.params, x);
      for (int t = 0; t < inst.cfg.tasks; ++t) {
        for (int k = 0; k < inst.cfg.heads; ++k) {
          CHECK(std::abs(f.predictions(b, t, k) - expect(t, k)) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("prediction-only forward agrees with the traced pass") {
  Rng rng(115, 22);
  const Array X = random_matrix(rng, 6, 4);
  const Instance inst = random_instance(rng, X);
  const Array traced = forward(inst.cfg, inst.params, X, true).predictions;
  const ForwardResult lean = forward(inst.cfg, inst.params, X, false);
  CHECK(lean.trace.empty());
  for (std::size_t i = 0; i < traced.size(); ++i) {
    CHECK(std::abs(traced[i] - lean.predictions[i]) <= 1e-12);
  }
}

TEST_CASE("leaf reach probabilities sum to one per tree and task") {
  Rng rng(131, 23);
  for (int rep = 0; rep < 30; ++rep) {
    const Array X = random_matrix(rng, 4, 3);
    const Instance inst = random_instance(rng, X);
    const ForwardResult f = forward(inst.cfg, inst.params, X);
    const int internal = inst.cfg.internal_nodes();
    for (std::size_t b = 0; b < 4; ++b) {
      for (int ts = 0; ts < inst.cfg.split_tasks(); ++ts) {
        for (int j = 0; j < inst.cfg.trees; ++j) {
          double total = 0.0;
          for (int leaf = 0; leaf < inst.cfg.leaf_nodes(); ++leaf) {
            total += f.trace.reach_at(internal + leaf, ts, b, j);
          }
          CHECK(std::abs(total - 1.0) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("backward matches central finite differences of a linear functional") {
  Rng rng(149, 24);
  for (int rep = 0; rep < 12; ++rep) {
    const Array X = random_matrix(rng, 4, 3);
    const Instance inst = random_instance(rng, X);
    Array G({4, static_cast<std::size_t>(inst.cfg.tasks), static_cast<std::size_t>(inst.cfg.heads)});
    for (double& v : G.values()) v = rng.normal();

    const ForwardResult f = forward(inst.cfg, inst.params, X);
    const EnsembleParams grads = backward(inst.cfg, inst.params, f.trace, X, G);

    const auto loss_of = [&](const EnsembleParams& p) {
      const Array pred = forward(inst.cfg, p, X, false).predictions;
      return dot(G, pred);
    };
    EnsembleParams probe = inst.params;
    const Array fd_split = testsupport::finite_diff_grad(
        [&](const Array& w) {
          probe.split_weights = w;
          return loss_of(probe);
        },
        inst.params.split_weights);
    probe = inst.params;
    const Array fd_leaf = testsupport::finite_diff_grad(
        [&](const Array& o) {
          probe.leaf_weights = o;
          return loss_of(probe);
        },
        inst.params.leaf_weights);

    CHECK(testsupport::max_rel_err(grads.split_weights, fd_split) < 1e-5);
    CHECK(testsupport::max_rel_err(grads.leaf_weights, fd_leaf) < 1e-5);
  }
}

TEST_CASE("backward matches the naive per-tree gradients") {
  Rng rng(163, 25);
  for (int rep = 0; rep < 20; ++rep) {
    const Array X = random_matrix(rng, 5, 4);
    const Instance inst = random_instance(rng, X);
    Array G({5, static_cast<std::size_t>(inst.cfg.tasks), static_cast<std::size_t>(inst.cfg.heads)});
    for (double& v : G.values()) v = rng.normal();

    const ForwardResult f = forward(inst.cfg, inst.params, X);
    const EnsembleParams fast = backward(inst.cfg, inst.params, f.trace, X, G);
    const EnsembleParams slow = per_tree_backward(inst.cfg, inst.params, X, G);
    for (std::size_t i = 0; i < fast.split_weights.size(); ++i) {
      CHECK(std::abs(fast.split_weights[i] - slow.split_weights[i]) <= 1e-10);
    }
    for (std::size_t i = 0; i < fast.leaf_weights.size(); ++i) {
      CHECK(std::abs(fast.leaf_weights[i] - slow.leaf_weights[i]) <= 1e-10);
    }
  }
}

TEST_CASE("per-tree forward agrees with the supernode batch") {
  Rng rng(167, 26);
  const Array X = random_matrix(rng, 7, 3);
  const Instance inst = random_instance(rng, X);
  const Array fast = forward(inst.cfg, inst.params, X, false).predictions;
  const Array slow = per_tree_forward(inst.cfg, inst.params, X);
  for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) <= 1e-10);
}

TEST_CASE("saturated splits get exactly zero split gradients") {
  EnsembleConfig cfg;
  cfg.trees = 2;
  cfg.depth = 2;
  cfg.features = 2;
  EnsembleParams params = zero_params(cfg);
  for (double& v : params.split_weights.values()) v = 25.0;  // everything saturates
  Rng rng(7, 27);
  for (double& v : params.leaf_weights.values()) v = rng.normal();

  const Array X({2, 2}, {1.0, 0.5, -0.25, -1.0});
  const ForwardResult f = forward(cfg, params, X);
  Array G({2, 1, 1}, {1.0, -2.0});
  const EnsembleParams grads = backward(cfg, params, f.trace, X, G);
  for (double v : grads.split_weights.values()) CHECK(v == 0.0);

  // Leaf gradients collapse to reach-weighted head gradients.
  const int internal = cfg.internal_nodes();
  for (int leaf = 0; leaf < cfg.leaf_nodes(); ++leaf) {
    for (int j = 0; j < cfg.trees; ++j) {
      double expect = 0.0;
      for (std::size_t b = 0; b < 2; ++b) {
        expect += f.trace.reach_at(internal + leaf, 0, b, j) * G(b, 0, 0);
      }
      CHECK(grads.leaf_weights(leaf, 0, j, 0) == expect);
    }
  }
}

TEST_CASE("zero output gradients give zero parameter gradients") {
  Rng rng(171, 28);
  const Array X = random_matrix(rng, 3, 3);
  const Instance inst = random_instance(rng, X);
  const ForwardResult f = forward(inst.cfg, inst.params, X);
  Array G({3, static_cast<std::size_t>(inst.cfg.tasks), static_cast<std::size_t>(inst.cfg.heads)});
  const EnsembleParams grads = backward(inst.cfg, inst.params, f.trace, X, G);
  for (double v : grads.split_weights.values()) CHECK(v == 0.0);
  for (double v : grads.leaf_weights.values()) CHECK(v == 0.0);
}

TEST_CASE("zeroing an unvisited subtree's parameters changes nothing") {
  EnsembleConfig cfg;
  cfg.trees = 3;
  cfg.depth = 3;
  cfg.features = 3;
  EnsembleParams params = zero_params(cfg);
  Rng rng(177, 29);
  for (double& v : params.split_weights.values()) v = 6.0 * rng.normal();
  for (double& v : params.leaf_weights.values()) v = rng.normal();

  const Array X = random_matrix(rng, 1, 3);
  const ForwardResult f = forward(cfg, params, X);
  Array G({1, 1, 1}, {1.0});
  const EnsembleParams grads = backward(cfg, params, f.trace, X, G);

  bool found_unvisited = false;
  EnsembleParams wiped = params;
  for (int node = 0; node < cfg.total_nodes(); ++node) {
    if (f.trace.visited_at(node, 0)) continue;
    found_unvisited = true;
    if (node < cfg.internal_nodes()) {
      for (int ffeat = 0; ffeat < cfg.features; ++ffeat) {
        for (int j = 0; j < cfg.trees; ++j) wiped.split_weights(node, 0, ffeat, j) = 0.0;
      }
    } else {
      const int leaf = node - cfg.internal_nodes();
      for (int j = 0; j < cfg.trees; ++j) wiped.leaf_weights(leaf, 0, j, 0) = 0.0;
    }
  }
  CHECK(found_unvisited);

  const ForwardResult f2 = forward(cfg, wiped, X);
  CHECK(f2.predictions(0, 0, 0) == f.predictions(0, 0, 0));
  const EnsembleParams grads2 = backward(cfg, wiped, f2.trace, X, G);
  for (std::size_t i = 0; i < grads.split_weights.size(); ++i) {
    CHECK(grads.split_weights[i] == grads2.split_weights[i]);
  }
  for (std::size_t i = 0; i < grads.leaf_weights.size(); ++i) {
    CHECK(grads.leaf_weights[i] == grads2.leaf_weights[i]);
  }
}

TEST_CASE("identical task slices produce identical task predictions") {
  EnsembleConfig cfg;
  cfg.trees = 4;
  cfg.depth = 2;
  cfg.features = 3;
  cfg.tasks = 2;
  EnsembleParams params = zero_params(cfg);
  Rng rng(191, 30);
  for (int i = 0; i < cfg.internal_nodes(); ++i) {
    for (int ffeat = 0; ffeat < cfg.features; ++ffeat) {
      for (int j = 0; j < cfg.trees; ++j) {
        const double v = rng.normal();
        params.split_weights(i, 0, ffeat, j) = v;
        params.split_weights(i, 1, ffeat, j) = v;
      }
    }
  }
  for (int l = 0; l < cfg.leaf_nodes(); ++l) {
    for (int j = 0; j < cfg.trees; ++j) {
      const double v = rng.normal();
      params.leaf_weights(l, 0, j, 0) = v;
      params.leaf_weights(l, 1, j, 0) = v;
    }
  }
  const Array X = random_matrix(rng, 5, 3);
  const Array pred = forward(cfg, params, X, false).predictions;
  for (std::size_t b = 0; b < 5; ++b) CHECK(pred(b, 0, 0) == pred(b, 1, 0));
}

TEST_CASE("shared splits route every task and head through one trace") {
  EnsembleConfig cfg;
  cfg.trees = 3;
  cfg.depth = 2;
  cfg.features = 3;
  cfg.tasks = 2;
  cfg.heads = 2;
  cfg.share_splits = true;
  EnsembleParams params = zero_params(cfg);
  Rng rng(193, 31);
  for (double& v : params.split_weights.values()) v = rng.normal();
  for (double& v : params.leaf_weights.values()) v = rng.normal();

  const Array X = random_matrix(rng, 4, 3);
  const ForwardResult f = forward(cfg, params, X);
  CHECK(f.trace.split_tasks == 1);

  // Rebuilding each task/head prediction from the single routing trace
  // reproduces the forward output: all heads share the probabilities.
  const int internal = cfg.internal_nodes();
  for (std::size_t b = 0; b < 4; ++b) {
    for (int t = 0; t < cfg.tasks; ++t) {
      for (int k = 0; k < cfg.heads; ++k) {
        double acc = 0.0;
        for (int leaf = 0; leaf < cfg.leaf_nodes(); ++leaf) {
          for (int j = 0; j < cfg.trees; ++j) {
            acc += f.trace.reach_at(internal + leaf, 0, b, j) *
                   params.leaf_weights(leaf, t, j, k);
          }
        }
        CHECK(std::abs(acc - f.predictions(b, t, k)) <= 1e-12);
      }
    }
  }

  // Broadcasting the shared slice to explicit per-task slices changes nothing.
  EnsembleConfig unshared = cfg;
  unshared.share_splits = false;
  EnsembleParams expanded = zero_params(unshared);
  expanded.leaf_weights = params.leaf_weights;
  for (int i = 0; i < internal; ++i) {
    for (int ffeat = 0; ffeat < cfg.features; ++ffeat) {
      for (int j = 0; j < cfg.trees; ++j) {
        const double v = params.split_weights(i, 0, ffeat, j);
        expanded.split_weights(i, 0, ffeat, j) = v;
        expanded.split_weights(i, 1, ffeat, j) = v;
      }
    }
  }
  const Array same = forward(unshared, expanded, X, true).predictions;
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i] == f.predictions[i]);
}

TEST_CASE("init_params is deterministic with zero leaves") {
  EnsembleConfig cfg;
  cfg.trees = 5;
  cfg.depth = 3;
  cfg.features = 4;
  const EnsembleParams a = init_params(cfg, 99);
  const EnsembleParams b = init_params(cfg, 99);
  for (std::size_t i = 0; i < a.split_weights.size(); ++i) {
    CHECK(a.split_weights[i] == b.split_weights[i]);
  }
  for (double v : a.leaf_weights.values()) CHECK(v == 0.0);

  Rng rng(201, 32);
  const Array X = random_matrix(rng, 6, 4);
  const Array pred = forward(cfg, a, X, false).predictions;
  for (double v : pred.values()) CHECK(v == 0.0);

  const EnsembleParams c = init_params(cfg, 100);
  bool any_differs = false;
  for (std::size_t i = 0; i < a.split_weights.size(); ++i) {
    any_differs |= (a.split_weights[i] != c.split_weights[i]);
  }
  CHECK(any_differs);
}

TEST_CASE("init keeps standardized inputs mostly in the soft region") {
  EnsembleConfig cfg;
  cfg.trees = 4;
  cfg.depth = 2;
  cfg.features = 5;
  const EnsembleParams params = init_params(cfg, 7);
  Rng rng(205, 33);
  const Array X = random_matrix(rng, 1000, 5);
  const ForwardResult f = forward(cfg, params, X);
  std::size_t soft = 0, total = 0;
  const double half = 0.5 * cfg.activation.gamma;
  for (double a : f.trace.pre_activations.values()) {
    soft += (std::abs(a) < half) ? 1 : 0;
    ++total;
  }
  CHECK(static_cast<double>(soft) / static_cast<double>(total) >= 0.9);
}

TEST_CASE("a task slice of the init does not depend on the task count") {
  EnsembleConfig one;
  one.trees = 3;
  one.depth = 2;
  one.features = 4;
  one.tasks = 1;
  EnsembleConfig two = one;
  two.tasks = 2;
  const EnsembleParams a = init_params(one, 42);
  const EnsembleParams b = init_params(two, 42);
  for (int i = 0; i < one.internal_nodes(); ++i) {
    for (int f = 0; f < one.features; ++f) {
      for (int j = 0; j < one.trees; ++j) {
        CHECK(a.split_weights(i, 0, f, j) == b.split_weights(i, 0, f, j));
      }
    }
  }
}

TEST_CASE("stale traces are rejected") {
  EnsembleConfig cfg;
  cfg.trees = 2;
  cfg.depth = 2;
  cfg.features = 3;
  const EnsembleParams params = init_params(cfg, 1);
  Rng rng(211, 34);
  const Array X = random_matrix(rng, 4, 3);
  const ForwardResult f = forward(cfg, params, X);

  const Array X_other = random_matrix(rng, 5, 3);
  Array G({5, 1, 1});
  CHECK_THROWS_AS(backward(cfg, params, f.trace, X_other, G), ShapeError);

  Array G_bad({4, 2, 1});
  CHECK_THROWS_AS(backward(cfg, params, f.trace, X, G_bad), ShapeError);

  ForwardTrace empty;
  Array G_ok({4, 1, 1});
  CHECK_THROWS_AS(backward(cfg, params, empty, X, G_ok), ShapeError);
}

TEST_CASE("non-finite features are rejected") {
  EnsembleConfig cfg;
  cfg.features = 2;
  const EnsembleParams params = init_params(cfg, 1);
  Array X({1, 2}, {1.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(forward(cfg, params, X), NumericError);
}
