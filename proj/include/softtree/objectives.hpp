#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "softtree/array.hpp"
#include "softtree/ensemble.hpp"

namespace softtree {

enum class ObjectiveKind { squared_error, logistic, poisson, zip, negative_binomial };

// Number of raw ensemble heads the loss consumes per task.
int heads_required(ObjectiveKind kind);
bool is_count_objective(ObjectiveKind kind);
const char* objective_name(ObjectiveKind kind);
ObjectiveKind parse_objective(const std::string& name);  // mse|logistic|poisson|zip|nb

// Raw heads above this bound trip the overflow guard instead of
// saturating silently.
inline constexpr double kOverflowGuard = 700.0;
// exp() arguments are clamped to this magnitude inside the count losses;
// the clamp enters the gradients symmetrically.
inline constexpr double kHeadClamp = 30.0;

struct LossGrad1 {
  double loss;
  double d0;
};

struct LossGrad2 {
  double loss;
  double d0;
  double d1;
};

LossGrad1 squared_error_loss(double f, double y);

// Binary cross-entropy on a logit head; y in {0,1}.
LossGrad1 logistic_nll(double f, double y);

// Poisson with log link: mu = exp(f); log y! dropped as a constant.
LossGrad1 poisson_nll(double f, double y);

// Zero-inflated Poisson; f_mu is the log-mean head, f_pi the logit head
// of the mixing probability. Includes log y! so losses are comparable.
LossGrad2 zip_nll(double f_mu, double f_pi, double y);

// Negative binomial with log-mean and log-dispersion heads.
LossGrad2 nb_nll(double f_mu, double f_phi, double y);

// Predicted response mean for a task from its raw heads.
double predicted_mean(ObjectiveKind kind, std::span<const double> heads);

struct BatchLoss {
  double loss = 0.0;
  Array output_grads;        // [B x T x k]; zero where mask is false
  std::size_t observed = 0;  // count of (sample, task) cells in the loss
};

// Mean loss over observed cells plus matching head gradients.
// A task with no observed entry simply contributes nothing.
BatchLoss batch_objective(ObjectiveKind kind, const Array& predictions,
                          const Array& responses, const std::vector<std::uint8_t>& mask);

struct PenaltyResult {
  double penalty = 0.0;
  Array split_grads;  // same shape as the split tensor
};

// Squared-Frobenius closeness of task hyperplanes at each supernode,
// lambda optionally decayed as lambda / 2^depth(node). split_weights is
// the [I x T x p x m] tensor; zero when T < 2 or lambda == 0.
PenaltyResult closeness_penalty(const Array& split_weights, double lambda, bool depth_decay);

double digamma(double x);

}  // namespace softtree
