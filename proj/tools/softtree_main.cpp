// softtree command line: train, tune, predict, evaluate, gen, bench.

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "softtree/dataio.hpp"
#include "softtree/error.hpp"
#include "softtree/metrics.hpp"
#include "softtree/model.hpp"
#include "softtree/model_store.hpp"
#include "softtree/reference.hpp"
#include "softtree/rng.hpp"
#include "softtree/synthetic.hpp"
#include "softtree/trainer.hpp"

namespace st = softtree;

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> read_header(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw st::DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw st::DataError(path + ": missing header row");
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == delimiter) {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("SOFTTREE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

struct TrainArgs {
  std::string data, tasks, loss = "mse", out, activation = "smooth_step";
  int trees = 20, depth = 3, batch = 128, epochs = 200, patience = 25, threads = 0;
  double lr = 0.01, lambda = 0.0, gamma = 1.0;
  std::uint64_t seed = 0;
  bool depth_decay = false, share_splits = false, unshared_heads = false;
  bool scale_responses = false;
};

struct Pipeline {
  st::Dataset train, valid, test;
  st::FeatureStats stats;
  std::optional<st::ResponseScaling> scaling;
};

// Shared train/tune preprocessing: split, fit standardization on the
// train rows, optionally min-max scale squared-error responses.
Pipeline prepare(const st::Dataset& raw, std::uint64_t seed, bool scale_responses) {
  const st::SplitAssignment assignment = st::split_rows(raw.rows(), seed);
  Pipeline pipe;
  pipe.stats = st::feature_stats(raw, assignment.rows_of(st::Split::train));
  st::Dataset standardized = st::apply_standardization(raw, pipe.stats);
  if (scale_responses) {
    pipe.scaling = st::response_scaling(standardized, assignment.rows_of(st::Split::train));
    standardized = st::apply_response_scaling(standardized, *pipe.scaling);
  }
  pipe.train = st::subset(standardized, assignment, st::Split::train);
  pipe.valid = st::subset(standardized, assignment, st::Split::valid);
  pipe.test = st::subset(standardized, assignment, st::Split::test);
  return pipe;
}

void print_report(const st::TrainReport& report) {
  std::cout << "train_report:\n";
  std::cout << "  epochs_run: " << report.epochs_run << "\n";
  std::cout << "  best_epoch: " << report.best_epoch << "\n";
  std::cout << "  best_validation_loss: " << fmt(report.best_validation_loss) << "\n";
  std::cout << "  final_train_loss: " << fmt(report.final_train_loss) << "\n";
  std::cout << "  stopped_early: " << (report.stopped_early ? "true" : "false") << "\n";
  std::cout << "history:\n";
  for (int e = 0; e < report.epochs_run; ++e) {
    std::cout << "  epoch " << e << ": train=" << fmt(report.train_loss[e])
              << " valid=" << fmt(report.valid_loss[e]) << "\n";
  }
}

st::Model assemble_model(const st::EnsembleConfig& cfg, st::ObjectiveKind objective,
                         bool unshared_heads, std::vector<st::EnsembleParams> blocks,
                         const st::Dataset& raw, const Pipeline& pipe, std::uint64_t seed,
                         const st::TrainReport& report) {
  st::Model model;
  model.config = cfg;
  model.objective = objective;
  model.unshared_heads = unshared_heads;
  model.blocks = std::move(blocks);
  model.feature_names = raw.feature_names;
  model.task_names = raw.task_names;
  model.standardization = pipe.stats;
  model.response_scaling = pipe.scaling;
  model.split_seed = seed;
  st::TrainSummary summary;
  summary.epochs_run = report.epochs_run;
  summary.best_epoch = report.best_epoch;
  summary.best_validation_loss = report.best_validation_loss;
  summary.final_train_loss = report.final_train_loss;
  summary.stopped_early = report.stopped_early;
  model.summary = summary;
  return model;
}

// Returns a usage-error message for bad flag combinations, empty if fine.
std::string check_loss_flags(st::ObjectiveKind objective, bool scale_responses,
                             bool unshared_heads) {
  if (scale_responses && objective != st::ObjectiveKind::squared_error) {
    return "--scale-responses requires --loss mse";
  }
  if (unshared_heads && st::heads_required(objective) < 2) {
    return "--unshared-heads requires a two-head loss (zip or nb)";
  }
  return "";
}

int cmd_train(const TrainArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  const st::ObjectiveKind objective = st::parse_objective(args.loss);
  if (const std::string err = check_loss_flags(objective, args.scale_responses,
                                               args.unshared_heads);
      !err.empty()) {
    std::cerr << err << "\n";
    return 1;
  }
  const st::Dataset raw = st::load_csv(args.data, split_list(args.tasks));
  const Pipeline pipe = prepare(raw, args.seed, args.scale_responses);

  st::EnsembleConfig cfg;
  cfg.trees = args.trees;
  cfg.depth = args.depth;
  cfg.features = static_cast<int>(raw.feature_count());
  cfg.heads = st::heads_required(objective);
  cfg.tasks = static_cast<int>(raw.task_count());
  cfg.share_splits = args.share_splits;
  cfg.activation.kind = st::parse_activation(args.activation);
  cfg.activation.gamma = args.gamma;

  st::TrainSpec spec;
  spec.learning_rate = args.lr;
  spec.batch_size = std::min<int>(args.batch, static_cast<int>(pipe.train.rows()));
  spec.max_epochs = args.epochs;
  spec.patience = std::min(args.patience, args.epochs);
  spec.lambda = args.lambda;
  spec.depth_decay = args.depth_decay;
  spec.seed = args.seed;
  spec.threads = resolve_threads(args.threads);

  st::FitResult fitres = st::fit(cfg, objective, args.unshared_heads, spec, pipe.train, pipe.valid);
  if (fitres.report.diverged) {
    throw st::NumericError("training diverged: validation loss became non-finite at epoch " +
                           std::to_string(fitres.report.epochs_run - 1));
  }

  const st::Model model = assemble_model(cfg, objective, args.unshared_heads,
                                         std::move(fitres.blocks), raw, pipe, args.seed,
                                         fitres.report);
  st::save_model(model, args.out);

  std::cout << "command: train\n";
  std::cout << "data: " << args.data << "\n";
  std::cout << "rows: " << raw.rows() << "\n";
  std::cout << "split: train=" << pipe.train.rows() << " valid=" << pipe.valid.rows()
            << " test=" << pipe.test.rows() << "\n";
  std::cout << "objective: " << st::objective_name(objective) << "\n";
  std::cout << "config:\n";
  std::cout << "  trees: " << cfg.trees << "\n";
  std::cout << "  depth: " << cfg.depth << "\n";
  std::cout << "  features: " << cfg.features << "\n";
  std::cout << "  heads: " << cfg.heads << "\n";
  std::cout << "  tasks: " << cfg.tasks << "\n";
  std::cout << "  share_splits: " << (cfg.share_splits ? "true" : "false") << "\n";
  std::cout << "  activation: " << st::activation_name(cfg.activation.kind)
            << " gamma=" << fmt(cfg.activation.gamma) << "\n";
  print_report(fitres.report);
  std::cout << "model: " << args.out << "\n";
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "timing:  # wall clock, excluded from determinism checks\n";
  std::cout << "  train_seconds: " << fmt(seconds) << "\n";
  return 0;
}

st::Dataset load_for_model(const st::Model& model, const std::string& path) {
  const std::vector<std::string> header = read_header(path, ',');
  std::vector<std::string> present_tasks;
  for (const auto& t : model.task_names) {
    if (std::find(header.begin(), header.end(), t) != header.end()) present_tasks.push_back(t);
  }
  st::Dataset data = st::load_csv(path, present_tasks);
  if (data.feature_names != model.feature_names) {
    throw st::DataError(path + ": feature columns do not match the model (expected " +
                        std::to_string(model.feature_names.size()) + " features in training order)");
  }
  return data;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  const st::Model model = st::load_model(model_path);
  const st::Dataset data = load_for_model(model, data_path);
  const st::Array outputs = st::model_outputs(model, data.features);

  std::ofstream out(out_path);
  if (!out) throw st::DataError("cannot write " + out_path);
  const std::size_t tasks = model.task_names.size();
  for (std::size_t t = 0; t < tasks; ++t) {
    if (t) out << ',';
    out << "pred_" << model.task_names[t];
    if (model.objective == st::ObjectiveKind::zip) out << ",pi_" << model.task_names[t];
    if (model.objective == st::ObjectiveKind::negative_binomial)
      out << ",phi_" << model.task_names[t];
  }
  out << '\n';
  const int heads = model.config.heads;
  for (std::size_t b = 0; b < data.rows(); ++b) {
    for (std::size_t t = 0; t < tasks; ++t) {
      const double* f = outputs.data() + (b * tasks + t) * heads;
      double mean = st::predicted_mean(model.objective, {f, static_cast<std::size_t>(heads)});
      if (model.objective == st::ObjectiveKind::squared_error && model.response_scaling) {
        mean = st::unscale_response(*model.response_scaling, t, mean);
      }
      if (t) out << ',';
      out << fmt(mean);
      if (model.objective == st::ObjectiveKind::zip) {
        const double pi = 1.0 / (1.0 + std::exp(-f[1]));
        out << ',' << fmt(pi);
      }
      if (model.objective == st::ObjectiveKind::negative_binomial) {
        out << ',' << fmt(std::exp(std::min(f[1], 30.0)));
      }
    }
    out << '\n';
  }
  std::cout << "command: predict\n";
  std::cout << "model: " << model_path << "\n";
  std::cout << "rows: " << data.rows() << "\n";
  std::cout << "out: " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& split_name) {
  const st::Model model = st::load_model(model_path);
  st::Dataset data = load_for_model(model, data_path);
  if (data.task_count() != model.task_names.size()) {
    throw st::DataError(data_path + ": task columns missing; evaluate needs observed responses");
  }
  if (split_name != "all") {
    st::Split which;
    if (split_name == "train") which = st::Split::train;
    else if (split_name == "valid") which = st::Split::valid;
    else if (split_name == "test") which = st::Split::test;
    else throw st::Error("unknown split: " + split_name + " (expected train|valid|test|all)");
    const st::SplitAssignment assignment = st::split_rows(data.rows(), model.split_seed);
    data = st::subset(data, assignment, which);
  }

  st::Dataset standardized = st::apply_standardization(data, model.standardization);
  if (model.response_scaling) {
    standardized = st::apply_response_scaling(standardized, *model.response_scaling);
  }
  const st::Array outputs = st::model_raw_outputs(model, standardized.features);
  const st::BatchLoss loss = st::batch_objective(model.objective, outputs,
                                                 standardized.responses, standardized.mask);

  std::cout << "command: evaluate\n";
  std::cout << "model: " << model_path << "\n";
  std::cout << "data: " << data_path << "\n";
  std::cout << "split: " << split_name << "\n";
  std::cout << "rows: " << data.rows() << "\n";
  std::cout << "loss: " << fmt(loss.loss) << "\n";
  std::cout << "observed: " << loss.observed << "\n";

  const std::size_t tasks = model.task_names.size();
  const int heads = model.config.heads;
  for (std::size_t t = 0; t < tasks; ++t) {
    std::vector<double> mean(data.rows()), y(data.rows());
    std::vector<std::uint8_t> mask(data.rows());
    std::size_t observed = 0;
    for (std::size_t b = 0; b < data.rows(); ++b) {
      const double* f = outputs.data() + (b * tasks + t) * heads;
      mean[b] = st::predicted_mean(model.objective, {f, static_cast<std::size_t>(heads)});
      y[b] = standardized.responses(b, t);
      mask[b] = standardized.mask[b * tasks + t];
      observed += mask[b];
    }
    std::cout << "task " << model.task_names[t] << ":\n";
    std::cout << "  observed: " << observed << "\n";
    if (model.objective == st::ObjectiveKind::squared_error) {
      // Metrics on the original response scale when scaling is stored.
      std::vector<double> mean_raw = mean, y_raw = y;
      if (model.response_scaling) {
        for (std::size_t b = 0; b < data.rows(); ++b) {
          mean_raw[b] = st::unscale_response(*model.response_scaling, t, mean[b]);
          y_raw[b] = data.responses(b, t);
        }
      }
      const auto m = st::mse(mean_raw, y_raw, mask);
      std::cout << "  mse: " << (m ? fmt(*m) : "undefined") << "\n";
    } else if (model.objective == st::ObjectiveKind::logistic) {
      const auto a = st::auc(mean, y, mask);
      std::cout << "  auc: " << (a ? fmt(*a) : "undefined") << "\n";
    } else {
      const auto dev = st::poisson_deviance(mean, y, mask);
      std::cout << "  deviance: " << (dev ? fmt(*dev) : "undefined") << "\n";
      std::vector<double> nonzero(data.rows());
      for (std::size_t b = 0; b < data.rows(); ++b) nonzero[b] = y[b] > 0.0 ? 1.0 : 0.0;
      const auto a = st::auc(mean, nonzero, mask);
      std::cout << "  auc_nonzero: " << (a ? fmt(*a) : "undefined") << "\n";
    }
  }
  return 0;
}

struct TuneArgs {
  std::string data, tasks, loss = "mse", out, activation = "smooth_step";
  int budget = 20, patience = 25, threads = 0;
  std::uint64_t seed = 0;
  bool depth_decay = false, share_splits = false, unshared_heads = false;
  bool scale_responses = false;
  double gamma = 1.0;
  st::SearchSpace space;
};

int cmd_tune(const TuneArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  const st::ObjectiveKind objective = st::parse_objective(args.loss);
  if (const std::string err = check_loss_flags(objective, args.scale_responses,
                                               args.unshared_heads);
      !err.empty()) {
    std::cerr << err << "\n";
    return 1;
  }
  const st::Dataset raw = st::load_csv(args.data, split_list(args.tasks));
  const Pipeline pipe = prepare(raw, args.seed, args.scale_responses);

  st::EnsembleConfig base;
  base.features = static_cast<int>(raw.feature_count());
  base.heads = st::heads_required(objective);
  base.tasks = static_cast<int>(raw.task_count());
  base.share_splits = args.share_splits;
  base.activation.kind = st::parse_activation(args.activation);
  base.activation.gamma = args.gamma;

  st::TrainSpec base_spec;
  base_spec.patience = args.patience;
  base_spec.depth_decay = args.depth_decay;
  base_spec.threads = resolve_threads(args.threads);

  const st::SearchResult search = st::random_search(base, objective, args.unshared_heads,
                                                    args.space, args.budget, args.seed,
                                                    base_spec, pipe.train, pipe.valid);

  std::cout << "command: tune\n";
  std::cout << "budget: " << args.budget << "\n";
  std::cout << "trials:\n";
  for (const auto& t : search.trials) {
    std::cout << "  trial " << t.index << ": depth=" << t.config.depth
              << " trees=" << t.config.trees << " batch=" << t.spec.batch_size
              << " lr=" << fmt(t.spec.learning_rate) << " lambda=" << fmt(t.spec.lambda)
              << " epochs=" << t.spec.max_epochs
              << " valid_loss=" << fmt(t.validation_loss) << "\n";
  }
  std::cout << "best_trial: " << search.best.index << "\n";
  std::cout << "best_validation_loss: " << fmt(search.best.validation_loss) << "\n";

  const st::Model model = assemble_model(search.best.config, objective, args.unshared_heads,
                                         std::vector<st::EnsembleParams>(search.best_blocks),
                                         raw, pipe, args.seed, search.best_report);
  st::save_model(model, args.out);
  std::cout << "model: " << args.out << "\n";
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "timing:  # wall clock, excluded from determinism checks\n";
  std::cout << "  tune_seconds: " << fmt(seconds) << "\n";
  return 0;
}

struct GenArgs {
  std::string kind = "linear", out;
  std::size_t n = 1000;
  int features = 5, tasks = 1;
  std::uint64_t seed = 0;
  double separation = 4.0, noise = 0.1, pi = 0.7, mu = 2.0, link_scale = 0.0;
  double link_scale_mu = 0.0, mu_cap = 0.0, phi = 5.0, relatedness = 0.9, missing = 0.0;
  bool opposed_links = false;
};

int cmd_gen(const GenArgs& args) {
  st::SyntheticSpec spec;
  spec.kind = st::parse_generator(args.kind);
  spec.n = args.n;
  spec.features = args.features;
  spec.seed = args.seed;
  spec.cluster_separation = args.separation;
  spec.noise_sd = args.noise;
  spec.pi_base = args.pi;
  spec.mu_base = args.mu;
  spec.link_scale = args.link_scale;
  spec.link_scale_mu = args.link_scale_mu;
  spec.opposed_links = args.opposed_links;
  spec.mu_cap = args.mu_cap;
  spec.phi = args.phi;
  spec.tasks = args.tasks;
  spec.relatedness = args.relatedness;
  spec.missing_rate = args.missing;
  const st::Dataset data = st::generate(spec);
  st::write_csv(data, args.out);
  std::cout << "command: gen\n";
  std::cout << "kind: " << st::generator_name(spec.kind) << "\n";
  std::cout << "rows: " << data.rows() << "\n";
  std::cout << "out: " << args.out << "\n";
  return 0;
}

int cmd_bench(int trees, int depth, int features, int batch, int reps) {
  st::EnsembleConfig cfg;
  cfg.trees = trees;
  cfg.depth = depth;
  cfg.features = features;
  cfg.heads = 1;
  cfg.tasks = 1;

  st::EnsembleParams params = st::init_params(cfg, 7);
  st::Rng leaf_rng(7, 99);
  for (double& v : params.leaf_weights.values()) v = leaf_rng.normal();

  st::Array X({static_cast<std::size_t>(batch), static_cast<std::size_t>(features)});
  st::Rng xrng(11, 98);
  for (double& v : X.values()) v = xrng.normal();
  st::Array grads({static_cast<std::size_t>(batch), 1, 1});
  for (double& v : grads.values()) v = 1.0;

  auto time_supernode = [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const st::ForwardResult f = st::forward(cfg, params, X, true);
    const st::EnsembleParams g = st::backward(cfg, params, f.trace, X, grads);
    (void)g;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto time_per_tree = [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const st::Array f = st::per_tree_forward(cfg, params, X);
    const st::EnsembleParams g = st::per_tree_backward(cfg, params, X, grads);
    (void)f;
    (void)g;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  time_supernode();  // warm up
  double super_best = 1e300, tree_best = 1e300;
  for (int r = 0; r < reps; ++r) {
    super_best = std::min(super_best, time_supernode());
    tree_best = std::min(tree_best, time_per_tree());
  }

  std::cout << "command: bench\n";
  std::cout << "config: trees=" << trees << " depth=" << depth << " features=" << features
            << " batch=" << batch << "\n";
  std::cout << "timing:  # wall clock\n";
  std::cout << "  supernode_seconds: " << fmt(super_best) << "\n";
  std::cout << "  per_tree_seconds: " << fmt(tree_best) << "\n";
  std::cout << "  speedup: " << fmt(tree_best / super_best) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable (soft) decision-tree ensembles"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "fit an ensemble on a CSV dataset");
  train->add_option("--data", train_args.data, "input CSV with header")->required();
  train->add_option("--tasks", train_args.tasks, "comma-separated response columns")->required();
  train->add_option("--loss", train_args.loss, "mse|logistic|poisson|zip|nb");
  train->add_option("--trees", train_args.trees, "ensemble size m");
  train->add_option("--depth", train_args.depth, "tree depth d");
  train->add_option("--lr", train_args.lr, "Adam learning rate");
  train->add_option("--batch", train_args.batch, "mini-batch size");
  train->add_option("--epochs", train_args.epochs, "max epochs");
  train->add_option("--patience", train_args.patience, "early-stopping patience");
  train->add_option("--lambda", train_args.lambda, "cross-task closeness penalty");
  train->add_flag("--depth-decay", train_args.depth_decay, "decay lambda as lambda/2^depth");
  train->add_flag("--share-splits", train_args.share_splits, "share split weights across tasks");
  train->add_flag("--unshared-heads", train_args.unshared_heads,
                  "separate ensembles per head (zip/nb ablation)");
  train->add_flag("--scale-responses", train_args.scale_responses,
                  "min-max scale responses to [0,1] (mse only)");
  train->add_option("--activation", train_args.activation, "smooth_step|logistic");
  train->add_option("--gamma", train_args.gamma, "smooth-step width");
  train->add_option("--seed", train_args.seed, "seed for split/init/shuffles");
  train->add_option("--threads", train_args.threads, "worker threads (env SOFTTREE_THREADS)");
  train->add_option("--out", train_args.out, "model file to write")->required();

  std::string predict_model, predict_data, predict_out;
  CLI::App* predict = app.add_subcommand("predict", "score a CSV with a trained model");
  predict->add_option("--model", predict_model)->required();
  predict->add_option("--data", predict_data)->required();
  predict->add_option("--out", predict_out, "output CSV of per-task predictions")->required();

  std::string eval_model, eval_data, eval_split = "all";
  CLI::App* evaluate = app.add_subcommand("evaluate", "metrics of a model on a CSV");
  evaluate->add_option("--model", eval_model)->required();
  evaluate->add_option("--data", eval_data)->required();
  evaluate->add_option("--split", eval_split, "train|valid|test|all (uses the stored split seed)");

  TuneArgs tune_args;
  CLI::App* tune = app.add_subcommand("tune", "random hyperparameter search");
  tune->add_option("--data", tune_args.data)->required();
  tune->add_option("--tasks", tune_args.tasks)->required();
  tune->add_option("--loss", tune_args.loss);
  tune->add_option("--budget", tune_args.budget, "number of trials");
  tune->add_option("--seed", tune_args.seed);
  tune->add_option("--patience", tune_args.patience);
  tune->add_option("--threads", tune_args.threads);
  tune->add_flag("--depth-decay", tune_args.depth_decay);
  tune->add_flag("--share-splits", tune_args.share_splits);
  tune->add_flag("--unshared-heads", tune_args.unshared_heads);
  tune->add_flag("--scale-responses", tune_args.scale_responses);
  tune->add_option("--activation", tune_args.activation);
  tune->add_option("--gamma", tune_args.gamma);
  tune->add_option("--min-depth", tune_args.space.depth_min);
  tune->add_option("--max-depth", tune_args.space.depth_max);
  tune->add_option("--min-trees", tune_args.space.trees_min);
  tune->add_option("--max-trees", tune_args.space.trees_max);
  tune->add_option("--min-lr", tune_args.space.lr_min);
  tune->add_option("--max-lr", tune_args.space.lr_max);
  tune->add_option("--min-lambda", tune_args.space.lambda_min);
  tune->add_option("--max-lambda", tune_args.space.lambda_max);
  tune->add_option("--min-epochs", tune_args.space.epochs_min);
  tune->add_option("--max-epochs", tune_args.space.epochs_max);
  tune->add_option("--out", tune_args.out, "best model file")->required();

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "write a synthetic dataset CSV");
  gen->add_option("--kind", gen_args.kind, "two_clusters|linear|zip|nb|multitask");
  gen->add_option("--n", gen_args.n, "rows");
  gen->add_option("--p", gen_args.features, "features");
  gen->add_option("--tasks-count", gen_args.tasks, "tasks (multitask)");
  gen->add_option("--seed", gen_args.seed);
  gen->add_option("--sep", gen_args.separation, "cluster separation");
  gen->add_option("--noise", gen_args.noise, "regression noise sd");
  gen->add_option("--pi", gen_args.pi, "base activation probability (zip)");
  gen->add_option("--mu", gen_args.mu, "base count mean");
  gen->add_option("--link-scale", gen_args.link_scale, "covariate effect on the links");
  gen->add_option("--link-scale-mu", gen_args.link_scale_mu,
                  "separate slope for the zip mean link (0 = same as --link-scale)");
  gen->add_flag("--opposed-links", gen_args.opposed_links,
                "point the mean link against the gate link");
  gen->add_option("--mu-cap", gen_args.mu_cap, "cap on the count mean");
  gen->add_option("--phi", gen_args.phi, "nb dispersion");
  gen->add_option("--rho", gen_args.relatedness, "task relatedness (multitask)");
  gen->add_option("--missing", gen_args.missing, "missing-response rate");
  gen->add_option("--out", gen_args.out)->required();

  int bench_trees = 100, bench_depth = 4, bench_features = 50, bench_batch = 256, bench_reps = 5;
  CLI::App* bench = app.add_subcommand("bench", "supernode vs per-tree timing");
  bench->add_option("--trees", bench_trees);
  bench->add_option("--depth", bench_depth);
  bench->add_option("--features", bench_features);
  bench->add_option("--batch", bench_batch);
  bench->add_option("--reps", bench_reps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*predict) return cmd_predict(predict_model, predict_data, predict_out);
    if (*evaluate) return cmd_evaluate(eval_model, eval_data, eval_split);
    if (*tune) return cmd_tune(tune_args);
    if (*gen) return cmd_gen(gen_args);
    if (*bench) return cmd_bench(bench_trees, bench_depth, bench_features, bench_batch, bench_reps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
