#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace softtree {

// All metrics are restricted to mask-true entries; an empty mask span
// means fully observed. nullopt marks an undefined metric (no observed
// entries, or a single-class AUC).

std::optional<double> mse(std::span<const double> pred, std::span<const double> y,
                          std::span<const std::uint8_t> mask = {});

// Mean Poisson deviance 2 [ y log(y/mu) - (y - mu) ], with the y = 0
// term read in the limit. Optional per-sample exposure weights.
std::optional<double> poisson_deviance(std::span<const double> mu, std::span<const double> y,
                                       std::span<const std::uint8_t> mask = {},
                                       std::span<const double> weights = {});

// Mann-Whitney AUC with half credit for ties.
std::optional<double> auc(std::span<const double> scores, std::span<const double> labels,
                          std::span<const std::uint8_t> mask = {});

}  // namespace softtree
