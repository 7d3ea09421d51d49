#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "softtree/error.hpp"
#include "softtree/model_store.hpp"
#include "softtree/rng.hpp"

using namespace softtree;

namespace {

Model sample_model(std::uint64_t seed, ObjectiveKind objective = ObjectiveKind::squared_error,
                   bool unshared = false) {
  Model m;
  m.config.trees = 3;
  m.config.depth = 2;
  m.config.features = 4;
  m.config.heads = heads_required(objective);
  m.config.tasks = 2;
  m.objective = objective;
  m.unshared_heads = unshared;
  Rng rng(seed, 71);
  for (int b = 0; b < m.block_count(); ++b) {
    EnsembleParams params = init_params(m.block_config(), seed, static_cast<std::uint64_t>(b));
    for (double& v : params.leaf_weights.values()) v = rng.normal();
    m.blocks.push_back(std::move(params));
  }
  m.feature_names = {"a", "b", "c", "d"};
  m.task_names = {"y1", "y2"};
  m.standardization.mean = {0.1, -0.2, 0.0, 3.5};
  m.standardization.sd = {1.0, 2.0, 1.0, 0.5};
  m.split_seed = seed;
  TrainSummary s;
  s.epochs_run = 12;
  s.best_epoch = 9;
  s.best_validation_loss = 0.25;
  s.final_train_loss = 0.19;
  s.stopped_early = true;
  m.summary = s;
  return m;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/softtree_model_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("round trip reproduces predictions bit for bit") {
  const Model m = sample_model(11);
  TempFile f("rt.json");
  save_model(m, f.path);
  const Model back = load_model(f.path);

  Rng rng(13, 72);
  Array X({100, 4});
  for (double& v : X.values()) v = rng.normal();
  const Array a = model_outputs(m, X);
  const Array b = model_outputs(back, X);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("two saves are byte-identical and save-load-save is idempotent") {
  const Model m = sample_model(17, ObjectiveKind::zip, true);
  TempFile f1("s1.json"), f2("s2.json"), f3("s3.json");
  save_model(m, f1.path);
  save_model(m, f2.path);
  CHECK(slurp(f1.path) == slurp(f2.path));

  const Model back = load_model(f1.path);
  save_model(back, f3.path);
  CHECK(slurp(f1.path) == slurp(f3.path));
}

TEST_CASE("version tampering is rejected") {
  const Model m = sample_model(19);
  std::string text = model_to_string(m);
  const auto pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 99");
  CHECK_THROWS_AS(model_from_string(text), ModelFormatError);
  try {
    model_from_string(text);
  } catch (const ModelFormatError& e) {
    CHECK(std::string(e.what()).find("format_version") != std::string::npos);
  }
}

TEST_CASE("truncated files name the byte offset") {
  const Model m = sample_model(23);
  const std::string text = model_to_string(m);
  const std::string cut = text.substr(0, text.size() / 2);
  try {
    model_from_string(cut);
    FAIL("expected ModelFormatError");
  } catch (const ModelFormatError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("shape violations are rejected") {
  const Model m = sample_model(29);
  std::string text = model_to_string(m);
  // Drop one weight from the split tensor.
  const auto pos = text.find("\"split_weights\": [");
  REQUIRE(pos != std::string::npos);
  const auto comma = text.find(',', pos);
  const auto bracket = text.find('[', pos);
  text.erase(bracket + 1, comma - bracket);
  CHECK_THROWS_AS(model_from_string(text), ModelFormatError);
}

TEST_CASE("non-finite weights are rejected") {
  const Model m = sample_model(31);
  std::string text = model_to_string(m);
  const auto pos = text.find("\"leaf_weights\": [");
  REQUIRE(pos != std::string::npos);
  const auto start = text.find('[', pos) + 1;
  const auto comma = text.find(',', start);
  text.replace(start, comma - start, "null");
  CHECK_THROWS_AS(model_from_string(text), ModelFormatError);
}

TEST_CASE("a hand-written minimal model evaluates as written") {
  // Depth-1 single tree, zero hyperplane: S(0) = 1/2, leaves 2 and 4.
  const std::string text = R"({
    "format": "softtree-model",
    "format_version": 1,
    "config": {"trees": 1, "depth": 1, "features": 1, "heads": 1, "tasks": 1,
               "share_splits": false, "activation": "smooth_step", "gamma": 1.0},
    "objective": "mse",
    "unshared_heads": false,
    "feature_names": ["x"],
    "task_names": ["y"],
    "standardization": {"mean": [0.0], "sd": [1.0]},
    "response_scaling": null,
    "split_seed": 0,
    "blocks": [{"split_weights": [0.0], "leaf_weights": [2.0, 4.0]}],
    "train_summary": null
  })";
  const Model m = model_from_string(text);
  Array X({1, 1}, {0.77});
  const Array out = model_outputs(m, X);
  CHECK(out(0, 0, 0) == 3.0);
}

TEST_CASE("wrong head counts for the objective are rejected") {
  Model m = sample_model(37);
  m.objective = ObjectiveKind::zip;  // needs 2 heads, config has 1
  TempFile f("bad.json");
  CHECK_THROWS_AS(save_model(m, f.path), ModelFormatError);
}
