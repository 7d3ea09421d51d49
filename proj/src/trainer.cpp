#include "softtree/trainer.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "softtree/error.hpp"
#include "softtree/rng.hpp"

namespace softtree {

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        std::scoped_lock lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Array gather_rows(const Array& X, const std::vector<std::size_t>& rows,
                  std::size_t begin, std::size_t end) {
  const std::size_t p = X.extent(1);
  Array out({end - begin, p});
  for (std::size_t i = begin; i < end; ++i) {
    const double* src = X.data() + rows[i] * p;
    double* dst = out.data() + (i - begin) * p;
    for (std::size_t c = 0; c < p; ++c) dst[c] = src[c];
  }
  return out;
}

// Head gradients restricted to the heads a parameter block owns.
Array slice_grads(const Array& grads, std::size_t row_begin, std::size_t row_end,
                  bool unshared, int block) {
  const std::size_t tasks = grads.extent(1);
  const std::size_t heads = grads.extent(2);
  const std::size_t out_heads = unshared ? 1 : heads;
  Array out({row_end - row_begin, tasks, out_heads});
  for (std::size_t b = row_begin; b < row_end; ++b) {
    for (std::size_t t = 0; t < tasks; ++t) {
      for (std::size_t k = 0; k < out_heads; ++k) {
        out(b - row_begin, t, k) = grads(b, t, unshared ? static_cast<std::size_t>(block) : k);
      }
    }
  }
  return out;
}

EnsembleConfig block_config(const EnsembleConfig& cfg, bool unshared_heads) {
  EnsembleConfig bc = cfg;
  if (unshared_heads) bc.heads = 1;
  return bc;
}

void check_finite_grads(const EnsembleParams& grads, int block) {
  if (!grads.split_weights.all_finite()) {
    throw NumericError("adam: non-finite gradient in split_weights (block " +
                       std::to_string(block) + ")");
  }
  if (!grads.leaf_weights.all_finite()) {
    throw NumericError("adam: non-finite gradient in leaf_weights (block " +
                       std::to_string(block) + ")");
  }
}

void adam_update_array(Array& param, Array& m, Array& v, const Array& g,
                       const TrainSpec& spec, double bias1, double bias2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = spec.beta1 * m[i] + (1.0 - spec.beta1) * g[i];
    v[i] = spec.beta2 * v[i] + (1.0 - spec.beta2) * g[i] * g[i];
    const double mhat = m[i] / bias1;
    const double vhat = v[i] / bias2;
    param[i] -= spec.learning_rate * mhat / (std::sqrt(vhat) + spec.epsilon);
  }
}

}  // namespace

void TrainSpec::validate(std::size_t train_rows) const {
  if (!(learning_rate > 0.0)) throw Error("train spec: learning rate must be positive");
  if (batch_size < 1) throw Error("train spec: batch size must be positive");
  if (static_cast<std::size_t>(batch_size) > train_rows) {
    throw Error("train spec: batch size " + std::to_string(batch_size) +
                " exceeds training rows " + std::to_string(train_rows));
  }
  if (max_epochs < 1) throw Error("train spec: max epochs must be positive");
  if (patience < 1 || patience > max_epochs) {
    throw Error("train spec: patience must be in [1, max_epochs]");
  }
  if (lambda < 0.0) throw Error("train spec: lambda must be non-negative");
  if (threads < 1) throw Error("train spec: threads must be positive");
}

AdamState make_adam_state(const EnsembleConfig& cfg, bool unshared_heads) {
  AdamState state;
  const int blocks = unshared_heads ? cfg.heads : 1;
  const EnsembleConfig bc = block_config(cfg, unshared_heads);
  for (int b = 0; b < blocks; ++b) {
    state.first_moment.push_back(zero_params(bc));
    state.second_moment.push_back(zero_params(bc));
  }
  return state;
}

void adam_step(AdamState& state, std::vector<EnsembleParams>& params,
               const std::vector<EnsembleParams>& grads, const TrainSpec& spec) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adam: mismatched parameter/gradient block counts");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    check_finite_grads(grads[b], static_cast<int>(b));
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(spec.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(spec.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    adam_update_array(params[b].split_weights, state.first_moment[b].split_weights,
                      state.second_moment[b].split_weights, grads[b].split_weights, spec,
                      bias1, bias2);
    adam_update_array(params[b].leaf_weights, state.first_moment[b].leaf_weights,
                      state.second_moment[b].leaf_weights, grads[b].leaf_weights, spec,
                      bias1, bias2);
  }
}

double dataset_loss(const EnsembleConfig& cfg, ObjectiveKind objective, bool unshared_heads,
                    const std::vector<EnsembleParams>& blocks, const Dataset& data) {
  const Array preds = raw_outputs(cfg, unshared_heads, blocks, data.features);
  return batch_objective(objective, preds, data.responses, data.mask).loss;
}

BatchGradient batch_gradient(const EnsembleConfig& cfg, ObjectiveKind objective,
                             bool unshared_heads, const std::vector<EnsembleParams>& blocks,
                             const Array& X, const Array& y,
                             const std::vector<std::uint8_t>& mask, int threads) {
  const std::size_t rows = X.extent(0);
  const int param_blocks = static_cast<int>(blocks.size());
  const EnsembleConfig bc = block_config(cfg, unshared_heads);
  const int row_blocks = static_cast<int>((rows + kRowBlock - 1) / kRowBlock);

  std::vector<std::size_t> identity(rows);
  for (std::size_t i = 0; i < rows; ++i) identity[i] = i;

  // Phase 1: forward per (row block, parameter block), traces retained.
  std::vector<std::vector<ForwardResult>> fwd(row_blocks);
  for (auto& f : fwd) f.resize(param_blocks);
  parallel_for(row_blocks * param_blocks, threads, [&](int idx) {
    const int rb = idx / param_blocks;
    const int pb = idx % param_blocks;
    const std::size_t begin = static_cast<std::size_t>(rb) * kRowBlock;
    const std::size_t end = std::min(rows, begin + kRowBlock);
    const Array Xb = gather_rows(X, identity, begin, end);
    fwd[rb][pb] = forward(bc, blocks[pb], Xb, /*want_trace=*/true);
  });

  Array preds({rows, static_cast<std::size_t>(cfg.tasks), static_cast<std::size_t>(cfg.heads)});
  for (int rb = 0; rb < row_blocks; ++rb) {
    const std::size_t begin = static_cast<std::size_t>(rb) * kRowBlock;
    for (int pb = 0; pb < param_blocks; ++pb) {
      const Array& part = fwd[rb][pb].predictions;
      for (std::size_t b = 0; b < part.extent(0); ++b) {
        for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.tasks); ++t) {
          if (unshared_heads) {
            preds(begin + b, t, static_cast<std::size_t>(pb)) = part(b, t, 0);
          } else {
            for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.heads); ++k) {
              preds(begin + b, t, k) = part(b, t, k);
            }
          }
        }
      }
    }
  }

  const BatchLoss batch = batch_objective(objective, preds, y, mask);

  // Phase 2: backward per (row block, parameter block).
  std::vector<std::vector<EnsembleParams>> partial(row_blocks);
  for (auto& g : partial) g.resize(param_blocks);
  parallel_for(row_blocks * param_blocks, threads, [&](int idx) {
    const int rb = idx / param_blocks;
    const int pb = idx % param_blocks;
    const std::size_t begin = static_cast<std::size_t>(rb) * kRowBlock;
    const std::size_t end = std::min(rows, begin + kRowBlock);
    const Array Xb = gather_rows(X, identity, begin, end);
    const Array g = slice_grads(batch.output_grads, begin, end, unshared_heads, pb);
    partial[rb][pb] = backward(bc, blocks[pb], fwd[rb][pb].trace, Xb, g);
  });

  BatchGradient result;
  result.data_loss = batch.loss;
  result.observed = batch.observed;
  for (int pb = 0; pb < param_blocks; ++pb) {
    EnsembleParams total = zero_params(bc);
    for (int rb = 0; rb < row_blocks; ++rb) {
      axpy(1.0, partial[rb][pb].split_weights, total.split_weights);
      axpy(1.0, partial[rb][pb].leaf_weights, total.leaf_weights);
    }
    result.grads.push_back(std::move(total));
  }
  return result;
}

FitResult fit(const EnsembleConfig& cfg, ObjectiveKind objective, bool unshared_heads,
              const TrainSpec& spec, const Dataset& train, const Dataset& valid) {
  cfg.validate();
  spec.validate(train.rows());
  if (cfg.heads != heads_required(objective)) {
    throw Error(std::string("fit: objective ") + objective_name(objective) + " needs " +
                std::to_string(heads_required(objective)) + " heads, config has " +
                std::to_string(cfg.heads));
  }
  if (valid.rows() == 0) throw Error("fit: validation split is empty");

  const int param_blocks = unshared_heads ? cfg.heads : 1;
  const EnsembleConfig bc = block_config(cfg, unshared_heads);
  std::vector<EnsembleParams> blocks;
  for (int b = 0; b < param_blocks; ++b) {
    blocks.push_back(init_params(bc, spec.seed, static_cast<std::uint64_t>(b)));
  }
  AdamState adam = make_adam_state(cfg, unshared_heads);

  const std::size_t n = train.rows();
  const std::size_t batch_size = static_cast<std::size_t>(spec.batch_size);
  const bool drop_last = n > batch_size && n % batch_size != 0;
  const std::size_t num_batches = drop_last ? n / batch_size : (n + batch_size - 1) / batch_size;

  FitResult result;
  TrainReport& report = result.report;
  std::vector<EnsembleParams> best_blocks = blocks;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_without_improvement = 0;

  std::vector<std::size_t> order(n);
  const Rng shuffle_base(spec.seed, streams::kShuffle);

  for (int epoch = 0; epoch < spec.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffler = shuffle_base.substream(static_cast<std::uint64_t>(epoch));
    shuffler.shuffle(order);

    double loss_sum = 0.0;
    std::size_t observed_sum = 0;
    for (std::size_t batch = 0; batch < num_batches; ++batch) {
      const std::size_t begin = batch * batch_size;
      const std::size_t end = std::min(n, begin + batch_size);
      const std::size_t rows = end - begin;
      Array Xb({rows, train.features.extent(1)});
      Array yb({rows, train.responses.extent(1)});
      std::vector<std::uint8_t> mb(rows * train.task_count());
      for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t r = order[begin + i];
        for (std::size_t c = 0; c < train.features.extent(1); ++c) Xb(i, c) = train.features(r, c);
        for (std::size_t t = 0; t < train.task_count(); ++t) {
          yb(i, t) = train.responses(r, t);
          mb[i * train.task_count() + t] = train.mask[r * train.task_count() + t];
        }
      }

      BatchGradient bg = batch_gradient(cfg, objective, unshared_heads, blocks, Xb, yb, mb,
                                        spec.threads);
      if (spec.lambda > 0.0) {
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          const PenaltyResult pen =
              closeness_penalty(blocks[i].split_weights, spec.lambda, spec.depth_decay);
          axpy(1.0, pen.split_grads, bg.grads[i].split_weights);
        }
      }
      adam_step(adam, blocks, bg.grads, spec);
      loss_sum += bg.data_loss * static_cast<double>(bg.observed);
      observed_sum += bg.observed;
    }

    report.train_loss.push_back(observed_sum ? loss_sum / static_cast<double>(observed_sum) : 0.0);
    const double val = dataset_loss(cfg, objective, unshared_heads, blocks, valid);
    report.valid_loss.push_back(val);
    report.epochs_run = epoch + 1;

    if (!std::isfinite(val)) {
      report.diverged = true;
      break;
    }
    if (val < best_val) {
      best_val = val;
      report.best_epoch = epoch;
      best_blocks = blocks;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= spec.patience) {
        report.stopped_early = true;
        break;
      }
    }
  }

  report.best_validation_loss = best_val;
  result.blocks = std::move(best_blocks);
  report.final_train_loss =
      dataset_loss(cfg, objective, unshared_heads, result.blocks, train);
  return result;
}

SearchResult random_search(const EnsembleConfig& base, ObjectiveKind objective,
                           bool unshared_heads, const SearchSpace& space, int budget,
                           std::uint64_t seed, const TrainSpec& base_spec,
                           const Dataset& train, const Dataset& valid) {
  if (budget < 1) throw Error("random_search: budget must be positive");
  const Rng search_base(seed, streams::kSearch);

  SearchResult result;
  double best_val = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < budget; ++trial) {
    Rng rng = search_base.substream(static_cast<std::uint64_t>(trial));
    EnsembleConfig cfg = base;
    cfg.depth = static_cast<int>(rng.uniform_int(space.depth_min, space.depth_max));
    cfg.trees = static_cast<int>(rng.uniform_int(space.trees_min, space.trees_max));

    TrainSpec spec = base_spec;
    spec.seed = seed;
    const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(space.batch_sizes.size()) - 1);
    spec.batch_size = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(space.batch_sizes[static_cast<std::size_t>(pick)]), train.rows()));
    spec.learning_rate = rng.log_uniform(space.lr_min, space.lr_max);
    spec.max_epochs = static_cast<int>(rng.uniform_int(space.epochs_min, space.epochs_max));
    spec.lambda = base.tasks > 1 ? rng.log_uniform(space.lambda_min, space.lambda_max) : 0.0;
    spec.patience = std::min(base_spec.patience, spec.max_epochs);

    FitResult fitres = fit(cfg, objective, unshared_heads, spec, train, valid);
    Trial t;
    t.index = trial;
    t.config = cfg;
    t.spec = spec;
    t.validation_loss = fitres.report.best_validation_loss;
    result.trials.push_back(t);
    if (t.validation_loss < best_val) {
      best_val = t.validation_loss;
      result.best = t;
      result.best_blocks = std::move(fitres.blocks);
      result.best_report = std::move(fitres.report);
    }
  }
  return result;
}

}  // namespace softtree
