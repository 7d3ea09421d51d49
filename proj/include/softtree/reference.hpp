#pragma once

#include "softtree/array.hpp"
#include "softtree/ensemble.hpp"

namespace softtree {

// Tree-by-tree scalar evaluation of the whole batch; one oracle_forward
// per row, kept as the timing baseline for the supernode path.
Array per_tree_forward(const EnsembleConfig& cfg, const EnsembleParams& params,
                       const Array& X);

// Naive per-tree gradients: differentiates the per-leaf routing products
// directly (recomputing path products per ancestor), summed over the
// batch. Slow by construction; used as an independent check and as the
// backward half of the timing baseline.
EnsembleParams per_tree_backward(const EnsembleConfig& cfg, const EnsembleParams& params,
                                 const Array& X, const Array& output_grads);

}  // namespace softtree
