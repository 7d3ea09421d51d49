#pragma once

#include <cstdint>
#include <vector>

#include "softtree/dataio.hpp"
#include "softtree/ensemble.hpp"
#include "softtree/model.hpp"
#include "softtree/objectives.hpp"

namespace softtree {

struct TrainSpec {
  double learning_rate = 0.01;
  int batch_size = 128;
  int max_epochs = 200;
  int patience = 25;
  double lambda = 0.0;
  bool depth_decay = false;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int threads = 1;

  void validate(std::size_t train_rows) const;
};

// Adam moment estimates, one pair of arrays per parameter block.
struct AdamState {
  std::vector<EnsembleParams> first_moment;
  std::vector<EnsembleParams> second_moment;
  long step = 0;
};

AdamState make_adam_state(const EnsembleConfig& cfg, bool unshared_heads);

// One bias-corrected Adam update over all parameter blocks. Throws
// NumericError naming the offending block on non-finite gradients.
void adam_step(AdamState& state, std::vector<EnsembleParams>& params,
               const std::vector<EnsembleParams>& grads, const TrainSpec& spec);

struct TrainReport {
  std::vector<double> train_loss;  // per epoch, data term only
  std::vector<double> valid_loss;
  int best_epoch = -1;
  double best_validation_loss = 0.0;
  double final_train_loss = 0.0;
  bool stopped_early = false;
  bool diverged = false;
  int epochs_run = 0;
};

struct FitResult {
  std::vector<EnsembleParams> blocks;
  TrainReport report;
};

struct BatchGradient {
  double data_loss = 0.0;
  std::size_t observed = 0;
  std::vector<EnsembleParams> grads;
};

// Samples are processed in fixed row blocks of kRowBlock and block
// partials are reduced in block order, so gradients are bit-identical
// for every thread count.
inline constexpr std::size_t kRowBlock = 64;

BatchGradient batch_gradient(const EnsembleConfig& cfg, ObjectiveKind objective,
                             bool unshared_heads, const std::vector<EnsembleParams>& blocks,
                             const Array& X, const Array& y,
                             const std::vector<std::uint8_t>& mask, int threads);

// Mean data-term loss of the blocks on a dataset (no penalty).
double dataset_loss(const EnsembleConfig& cfg, ObjectiveKind objective, bool unshared_heads,
                    const std::vector<EnsembleParams>& blocks, const Dataset& data);

// Mini-batch Adam with seeded shuffles and early stopping on validation
// loss; returns the best-validation snapshot. The epoch-e row order is
// Rng(seed, streams::kShuffle).substream(e) applied to 0..N-1; the final
// incomplete batch is dropped when N > batch_size.
FitResult fit(const EnsembleConfig& cfg, ObjectiveKind objective, bool unshared_heads,
              const TrainSpec& spec, const Dataset& train, const Dataset& valid);

struct SearchSpace {
  int depth_min = 2, depth_max = 4;
  int trees_min = 5, trees_max = 100;
  std::vector<int> batch_sizes{64, 128, 256, 512};
  double lr_min = 1e-5, lr_max = 1e-2;
  double lambda_min = 1e-5, lambda_max = 10.0;
  int epochs_min = 20, epochs_max = 500;
};

struct Trial {
  int index = 0;
  EnsembleConfig config;
  TrainSpec spec;
  double validation_loss = 0.0;
};

struct SearchResult {
  Trial best;
  std::vector<EnsembleParams> best_blocks;
  TrainReport best_report;
  std::vector<Trial> trials;
};

// Random search over the declared ranges; deterministic given the seed,
// which also seeds each trial's fit.
SearchResult random_search(const EnsembleConfig& base, ObjectiveKind objective,
                           bool unshared_heads, const SearchSpace& space, int budget,
                           std::uint64_t seed, const TrainSpec& base_spec,
                           const Dataset& train, const Dataset& valid);

}  // namespace softtree
