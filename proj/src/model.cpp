#include "softtree/model.hpp"

#include "softtree/error.hpp"

namespace softtree {

EnsembleConfig Model::block_config() const {
  EnsembleConfig cfg = config;
  if (unshared_heads) cfg.heads = 1;
  return cfg;
}

void Model::validate() const {
  config.validate();
  if (config.heads != heads_required(objective)) {
    throw ModelFormatError(std::string("model: objective ") + objective_name(objective) +
                           " needs " + std::to_string(heads_required(objective)) +
                           " heads, config has " + std::to_string(config.heads));
  }
  if (unshared_heads && config.heads < 2) {
    throw ModelFormatError("model: unshared heads require a two-head objective");
  }
  if (static_cast<int>(blocks.size()) != block_count()) {
    throw ModelFormatError("model: expected " + std::to_string(block_count()) +
                           " parameter blocks, found " + std::to_string(blocks.size()));
  }
  for (int b = 0; b < block_count(); ++b) {
    blocks[b].check_shapes(block_config());
    if (!blocks[b].split_weights.all_finite() || !blocks[b].leaf_weights.all_finite()) {
      throw ModelFormatError("model: non-finite weights in block " + std::to_string(b));
    }
  }
  if (standardization.mean.size() != static_cast<std::size_t>(config.features) ||
      standardization.sd.size() != static_cast<std::size_t>(config.features)) {
    throw ModelFormatError("model: standardization stats do not match feature count");
  }
  if (task_names.size() != static_cast<std::size_t>(config.tasks)) {
    throw ModelFormatError("model: task names do not match task count");
  }
}

Array raw_outputs(const EnsembleConfig& cfg, bool unshared_heads,
                  const std::vector<EnsembleParams>& blocks, const Array& X) {
  if (!unshared_heads) {
    return forward(cfg, blocks[0], X, /*want_trace=*/false).predictions;
  }
  EnsembleConfig bc = cfg;
  bc.heads = 1;
  const std::size_t batch = X.extent(0);
  Array out({batch, static_cast<std::size_t>(cfg.tasks), static_cast<std::size_t>(cfg.heads)});
  for (std::size_t blk = 0; blk < blocks.size(); ++blk) {
    const Array part = forward(bc, blocks[blk], X, false).predictions;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.tasks); ++t) {
        out(b, t, blk) = part(b, t, 0);
      }
    }
  }
  return out;
}

Array model_raw_outputs(const Model& model, const Array& X_std) {
  return raw_outputs(model.config, model.unshared_heads, model.blocks, X_std);
}

Array model_outputs(const Model& model, const Array& X_raw) {
  return model_raw_outputs(model, standardize_features(X_raw, model.standardization));
}

}  // namespace softtree
