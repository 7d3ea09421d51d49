#include "softtree/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "softtree/error.hpp"

namespace softtree {

namespace {

bool observed(std::span<const std::uint8_t> mask, std::size_t i) {
  return mask.empty() || mask[i] != 0;
}

}  // namespace

std::optional<double> mse(std::span<const double> pred, std::span<const double> y,
                          std::span<const std::uint8_t> mask) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!observed(mask, i)) continue;
    const double r = pred[i] - y[i];
    total += r * r;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

std::optional<double> poisson_deviance(std::span<const double> mu, std::span<const double> y,
                                       std::span<const std::uint8_t> mask,
                                       std::span<const double> weights) {
  double total = 0.0, weight_total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!observed(mask, i)) continue;
    if (!(mu[i] > 0.0)) {
      throw NumericError("poisson_deviance: mu must be positive, got " + std::to_string(mu[i]) +
                         " at entry " + std::to_string(i));
    }
    const double w = weights.empty() ? 1.0 : weights[i];
    const double yl = y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) : 0.0;
    total += w * 2.0 * (yl - (y[i] - mu[i]));
    weight_total += w;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / weight_total;
}

std::optional<double> auc(std::span<const double> scores, std::span<const double> labels,
                          std::span<const std::uint8_t> mask) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(scores.size());
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!observed(mask, i)) continue;
    const bool is_pos = labels[i] > 0.0;
    pts.emplace_back(scores[i], is_pos ? 1.0 : 0.0);
    (is_pos ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) return std::nullopt;

  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Rank sum of positives with average ranks across score ties.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    while (j < pts.size() && pts[j].first == pts[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t q = i; q < j; ++q) {
      if (pts[q].second > 0.0) rank_sum += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace softtree
