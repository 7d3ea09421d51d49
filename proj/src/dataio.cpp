#include "softtree/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "softtree/error.hpp"
#include "softtree/rng.hpp"

namespace softtree {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
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

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::size_t> SplitAssignment::rows_of(Split which) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == which) rows.push_back(i);
  }
  return rows;
}

Dataset load_csv(const std::string& path, const std::vector<std::string>& task_columns,
                 char delimiter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  const std::vector<std::string> header = split_line(line, delimiter);

  std::vector<std::size_t> task_idx;
  for (const auto& name : task_columns) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(path + ": unknown task column '" + name + "'");
    }
    task_idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::size_t> feature_idx;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (std::find(task_idx.begin(), task_idx.end(), c) == task_idx.end()) {
      feature_idx.push_back(c);
    }
  }

  Dataset data;
  for (std::size_t c : feature_idx) data.feature_names.push_back(header[c]);
  data.task_names = task_columns;

  std::vector<double> features, responses;
  std::vector<std::uint8_t> mask;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  std::size_t pending_blank = 0;  // blank lines are only tolerated at EOF
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") {
      pending_blank = line_no;
      continue;
    }
    if (pending_blank) {
      throw DataError(path + ":" + std::to_string(pending_blank) + ": blank line inside data");
    }
    const std::vector<std::string> cells = split_line(line, delimiter);
    if (cells.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    for (std::size_t c : feature_idx) {
      double v;
      if (cells[c].empty() || !parse_double(cells[c], v) || !std::isfinite(v)) {
        throw DataError(path + ":" + std::to_string(line_no) + ": column '" + header[c] +
                        "': feature cell '" + cells[c] + "' is not a finite number");
      }
      features.push_back(v);
    }
    for (std::size_t c : task_idx) {
      double v;
      if (cells[c].empty() || cells[c] == "NaN") {
        responses.push_back(0.0);
        mask.push_back(0);
      } else if (parse_double(cells[c], v) && std::isfinite(v)) {
        responses.push_back(v);
        mask.push_back(1);
      } else {
        throw DataError(path + ":" + std::to_string(line_no) + ": column '" + header[c] +
                        "': response cell '" + cells[c] + "' is not a number");
      }
    }
    ++rows;
  }

  data.features = Array({rows, feature_idx.size()}, std::move(features));
  data.responses = Array({rows, task_idx.size()}, std::move(responses));
  data.mask = std::move(mask);
  return data;
}

void write_csv(const Dataset& data, const std::string& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const std::size_t p = data.feature_count(), tasks = data.task_count();
  for (std::size_t c = 0; c < p; ++c) {
    if (c) out << delimiter;
    out << data.feature_names[c];
  }
  for (std::size_t t = 0; t < tasks; ++t) {
    if (p || t) out << delimiter;
    out << data.task_names[t];
  }
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      if (c) out << delimiter;
      out << format_double(data.features(r, c));
    }
    for (std::size_t t = 0; t < tasks; ++t) {
      if (p || t) out << delimiter;
      if (data.observed(r, t)) out << format_double(data.responses(r, t));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

SplitAssignment split_rows(std::size_t n, std::uint64_t seed) {
  if (n < 5) {
    throw DataError("split: need at least 5 rows, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed, streams::kSplit);
  rng.shuffle(order);

  const auto n_train = static_cast<std::size_t>(std::llround(0.64 * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::llround(0.16 * static_cast<double>(n)));
  SplitAssignment assignment;
  assignment.seed = seed;
  assignment.labels.assign(n, Split::test);
  for (std::size_t i = 0; i < n_train; ++i) assignment.labels[order[i]] = Split::train;
  for (std::size_t i = n_train; i < n_train + n_valid; ++i) assignment.labels[order[i]] = Split::valid;
  return assignment;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  const std::size_t p = data.feature_count(), tasks = data.task_count();
  Dataset out;
  out.feature_names = data.feature_names;
  out.task_names = data.task_names;
  out.features = Array({rows.size(), p});
  out.responses = Array({rows.size(), tasks});
  out.mask.resize(rows.size() * tasks);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    for (std::size_t c = 0; c < p; ++c) out.features(i, c) = data.features(r, c);
    for (std::size_t t = 0; t < tasks; ++t) {
      out.responses(i, t) = data.responses(r, t);
      out.mask[i * tasks + t] = data.mask[r * tasks + t];
    }
  }
  return out;
}

Dataset subset(const Dataset& data, const SplitAssignment& assignment, Split which) {
  return subset(data, assignment.rows_of(which));
}

FeatureStats feature_stats(const Dataset& data, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw DataError("feature_stats: empty row set");
  const std::size_t p = data.feature_count();
  FeatureStats stats;
  stats.mean.assign(p, 0.0);
  stats.sd.assign(p, 1.0);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (std::size_t c = 0; c < p; ++c) {
    double s = 0.0;
    for (std::size_t r : rows) s += data.features(r, c);
    stats.mean[c] = s * inv;
    double ss = 0.0;
    for (std::size_t r : rows) {
      const double d = data.features(r, c) - stats.mean[c];
      ss += d * d;
    }
    const double sd = std::sqrt(ss * inv);
    stats.sd[c] = sd > 0.0 ? sd : 1.0;  // constant column: leave 1, zeroing handles it
  }
  return stats;
}

Array standardize_features(const Array& X, const FeatureStats& stats) {
  if (X.rank() != 2 || X.extent(1) != stats.mean.size()) {
    throw ShapeError("standardize: X is " + shape_string(X) + ", stats have " +
                     std::to_string(stats.mean.size()) + " features");
  }
  Array out(X.shape());
  for (std::size_t r = 0; r < X.extent(0); ++r) {
    for (std::size_t c = 0; c < X.extent(1); ++c) {
      out(r, c) = (X(r, c) - stats.mean[c]) / stats.sd[c];
    }
  }
  return out;
}

Dataset apply_standardization(const Dataset& data, const FeatureStats& stats) {
  Dataset out = data;
  out.features = standardize_features(data.features, stats);
  return out;
}

ResponseScaling response_scaling(const Dataset& data, const std::vector<std::size_t>& rows) {
  const std::size_t tasks = data.task_count();
  ResponseScaling scaling;
  scaling.min.assign(tasks, 0.0);
  scaling.max.assign(tasks, 1.0);
  for (std::size_t t = 0; t < tasks; ++t) {
    bool seen = false;
    double lo = 0.0, hi = 0.0;
    for (std::size_t r : rows) {
      if (!data.observed(r, t)) continue;
      const double v = data.responses(r, t);
      if (!seen) {
        lo = hi = v;
        seen = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    scaling.min[t] = seen ? lo : 0.0;
    scaling.max[t] = (seen && hi > lo) ? hi : scaling.min[t] + 1.0;
  }
  return scaling;
}

Dataset apply_response_scaling(const Dataset& data, const ResponseScaling& scaling) {
  Dataset out = data;
  const std::size_t tasks = data.task_count();
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t t = 0; t < tasks; ++t) {
      if (!data.observed(r, t)) continue;
      out.responses(r, t) = (data.responses(r, t) - scaling.min[t]) /
                            (scaling.max[t] - scaling.min[t]);
    }
  }
  return out;
}

double unscale_response(const ResponseScaling& scaling, std::size_t task, double value) {
  return scaling.min[task] + value * (scaling.max[task] - scaling.min[task]);
}

}  // namespace softtree
