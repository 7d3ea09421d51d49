#include "softtree/model_store.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "softtree/error.hpp"

namespace softtree {

namespace {

using Json = nlohmann::ordered_json;

Json dump_array(const Array& a) {
  Json values = Json::array();
  for (double v : a.values()) values.push_back(v);
  return values;
}

std::vector<double> read_values(const Json& j, const char* field) {
  if (!j.is_array()) throw ModelFormatError(std::string("model file: ") + field + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw ModelFormatError(std::string("model file: ") + field + " holds a non-numeric entry");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string model_to_string(const Model& model) {
  model.validate();
  Json doc;
  doc["format"] = "softtree-model";
  doc["format_version"] = kModelFormatVersion;

  Json config;
  config["trees"] = model.config.trees;
  config["depth"] = model.config.depth;
  config["features"] = model.config.features;
  config["heads"] = model.config.heads;
  config["tasks"] = model.config.tasks;
  config["share_splits"] = model.config.share_splits;
  config["activation"] = activation_name(model.config.activation.kind);
  config["gamma"] = model.config.activation.gamma;
  doc["config"] = std::move(config);

  doc["objective"] = objective_name(model.objective);
  doc["unshared_heads"] = model.unshared_heads;
  doc["feature_names"] = model.feature_names;
  doc["task_names"] = model.task_names;
  doc["standardization"] = {{"mean", model.standardization.mean},
                            {"sd", model.standardization.sd}};
  if (model.response_scaling) {
    doc["response_scaling"] = {{"min", model.response_scaling->min},
                               {"max", model.response_scaling->max}};
  } else {
    doc["response_scaling"] = nullptr;
  }
  doc["split_seed"] = model.split_seed;

  Json blocks = Json::array();
  for (const auto& block : model.blocks) {
    Json b;
    b["split_weights"] = dump_array(block.split_weights);
    b["leaf_weights"] = dump_array(block.leaf_weights);
    blocks.push_back(std::move(b));
  }
  doc["blocks"] = std::move(blocks);

  if (model.summary) {
    Json s;
    s["epochs_run"] = model.summary->epochs_run;
    s["best_epoch"] = model.summary->best_epoch;
    s["best_validation_loss"] = model.summary->best_validation_loss;
    s["final_train_loss"] = model.summary->final_train_loss;
    s["stopped_early"] = model.summary->stopped_early;
    doc["train_summary"] = std::move(s);
  } else {
    doc["train_summary"] = nullptr;
  }

  return doc.dump(2) + "\n";
}

Model model_from_string(const std::string& text, const std::string& origin) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelFormatError(origin + ": parse error at byte " + std::to_string(e.byte) +
                           ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "softtree-model") {
      throw ModelFormatError(origin + ": not a softtree model file");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError(origin + ": unsupported format_version " + std::to_string(version) +
                             " (expected " + std::to_string(kModelFormatVersion) + ")");
    }

    Model model;
    const Json& config = doc.at("config");
    model.config.trees = config.at("trees").get<int>();
    model.config.depth = config.at("depth").get<int>();
    model.config.features = config.at("features").get<int>();
    model.config.heads = config.at("heads").get<int>();
    model.config.tasks = config.at("tasks").get<int>();
    model.config.share_splits = config.at("share_splits").get<bool>();
    model.config.activation.kind = parse_activation(config.at("activation").get<std::string>());
    model.config.activation.gamma = config.at("gamma").get<double>();

    model.objective = parse_objective(doc.at("objective").get<std::string>());
    model.unshared_heads = doc.at("unshared_heads").get<bool>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.task_names = doc.at("task_names").get<std::vector<std::string>>();
    model.standardization.mean = doc.at("standardization").at("mean").get<std::vector<double>>();
    model.standardization.sd = doc.at("standardization").at("sd").get<std::vector<double>>();
    if (!doc.at("response_scaling").is_null()) {
      ResponseScaling scaling;
      scaling.min = doc.at("response_scaling").at("min").get<std::vector<double>>();
      scaling.max = doc.at("response_scaling").at("max").get<std::vector<double>>();
      model.response_scaling = std::move(scaling);
    }
    model.split_seed = doc.at("split_seed").get<std::uint64_t>();

    const Json& blocks = doc.at("blocks");
    for (int blk = 0; blk < static_cast<int>(blocks.size()); ++blk) {
      const EnsembleConfig bc = [&] {
        EnsembleConfig c = model.config;
        if (model.unshared_heads) c.heads = 1;
        return c;
      }();
      EnsembleParams params;
      std::vector<double> w = read_values(blocks[blk].at("split_weights"), "split_weights");
      std::vector<double> o = read_values(blocks[blk].at("leaf_weights"), "leaf_weights");
      const std::vector<std::size_t> w_shape = {
          static_cast<std::size_t>(bc.internal_nodes()),
          static_cast<std::size_t>(bc.split_tasks()),
          static_cast<std::size_t>(bc.features), static_cast<std::size_t>(bc.trees)};
      const std::vector<std::size_t> o_shape = {
          static_cast<std::size_t>(bc.leaf_nodes()), static_cast<std::size_t>(bc.tasks),
          static_cast<std::size_t>(bc.trees), static_cast<std::size_t>(bc.heads)};
      params.split_weights = Array(w_shape, std::move(w));
      params.leaf_weights = Array(o_shape, std::move(o));
      model.blocks.push_back(std::move(params));
    }

    if (!doc.at("train_summary").is_null()) {
      const Json& s = doc.at("train_summary");
      TrainSummary summary;
      summary.epochs_run = s.at("epochs_run").get<int>();
      summary.best_epoch = s.at("best_epoch").get<int>();
      summary.best_validation_loss = s.at("best_validation_loss").get<double>();
      summary.final_train_loss = s.at("final_train_loss").get<double>();
      summary.stopped_early = s.at("stopped_early").get<bool>();
      model.summary = summary;
    }

    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(origin + ": malformed model file: " + e.what());
  } catch (const ShapeError& e) {
    throw ModelFormatError(origin + ": " + e.what());
  }
}

void save_model(const Model& model, const std::string& path) {
  const std::string text = model_to_string(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelFormatError("cannot write " + path);
  out << text;
  if (!out) throw ModelFormatError("failed writing " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_string(buf.str(), path);
}

}  // namespace softtree
