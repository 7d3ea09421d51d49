#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softtree/array.hpp"

namespace softtree {

// Column-typed design matrix with per-task responses and observation
// masks. Missing responses are masked out; missing features are an error.
struct Dataset {
  Array features;               // [N x p]
  Array responses;              // [N x T]
  std::vector<std::uint8_t> mask;  // N*T, row-major; 0 = unobserved
  std::vector<std::string> feature_names;
  std::vector<std::string> task_names;

  std::size_t rows() const { return features.rank() ? features.extent(0) : 0; }
  std::size_t feature_count() const { return feature_names.size(); }
  std::size_t task_count() const { return task_names.size(); }
  bool observed(std::size_t row, std::size_t task) const {
    return mask[row * task_count() + task] != 0;
  }
};

// Parses a delimited text file with a header row. Columns named in
// task_columns become responses (empty cell or literal NaN = missing);
// every other column is a numeric feature.
Dataset load_csv(const std::string& path, const std::vector<std::string>& task_columns,
                 char delimiter = ',');

void write_csv(const Dataset& data, const std::string& path, char delimiter = ',');

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2 };

struct SplitAssignment {
  std::vector<Split> labels;  // one per row
  std::uint64_t seed = 0;

  std::vector<std::size_t> rows_of(Split which) const;
};

// Seeded uniform shuffle then a contiguous 64/16/20 partition.
SplitAssignment split_rows(std::size_t n, std::uint64_t seed);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows);
Dataset subset(const Dataset& data, const SplitAssignment& assignment, Split which);

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> sd;  // constant columns keep sd = 1
};

// Per-feature mean/sd over the given rows (the train split).
FeatureStats feature_stats(const Dataset& data, const std::vector<std::size_t>& rows);

// (x - mean) / sd per column; constant columns end up identically zero.
Dataset apply_standardization(const Dataset& data, const FeatureStats& stats);
Array standardize_features(const Array& X, const FeatureStats& stats);

struct ResponseScaling {
  std::vector<double> min;  // per task
  std::vector<double> max;
};

// Min-max response scaling to [0,1] for squared-error tasks, fitted on
// the given rows. Degenerate (constant) tasks map to 0.
ResponseScaling response_scaling(const Dataset& data, const std::vector<std::size_t>& rows);
Dataset apply_response_scaling(const Dataset& data, const ResponseScaling& scaling);
double unscale_response(const ResponseScaling& scaling, std::size_t task, double value);

}  // namespace softtree
