#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softtree/dataio.hpp"
#include "softtree/ensemble.hpp"
#include "softtree/objectives.hpp"

namespace softtree {

struct TrainSummary {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_validation_loss = 0.0;
  double final_train_loss = 0.0;
  bool stopped_early = false;
};

// A trained predictor: ensemble weights plus everything needed to score
// raw feature rows (standardization, objective, optional response scale).
// Two-head objectives normally share one ensemble across heads; the
// unshared ablation keeps one parameter block per head.
struct Model {
  EnsembleConfig config;  // heads = total heads per task
  ObjectiveKind objective = ObjectiveKind::squared_error;
  bool unshared_heads = false;
  std::vector<EnsembleParams> blocks;
  std::vector<std::string> feature_names;
  std::vector<std::string> task_names;
  FeatureStats standardization;
  std::optional<ResponseScaling> response_scaling;
  std::uint64_t split_seed = 0;
  std::optional<TrainSummary> summary;

  int block_count() const { return unshared_heads ? config.heads : 1; }
  // Per-block ensemble config (identical except for the head count).
  EnsembleConfig block_config() const;
  void validate() const;
};

// Raw head outputs [B x T x k] for a set of parameter blocks; the
// unshared layout evaluates one single-head ensemble per head column.
Array raw_outputs(const EnsembleConfig& cfg, bool unshared_heads,
                  const std::vector<EnsembleParams>& blocks, const Array& X);

// Raw head outputs [B x T x k] for already-standardized features.
Array model_raw_outputs(const Model& model, const Array& X_std);

// Standardizes raw features with the stored stats, then evaluates.
Array model_outputs(const Model& model, const Array& X_raw);

}  // namespace softtree
