#include "softtree/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "softtree/error.hpp"

namespace softtree {

namespace {

double softplus(double t) {
  // log(1 + e^t) without overflow.
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void guard_head(const char* who, double f) {
  if (!(f <= kOverflowGuard)) {
    throw NumericError(std::string(who) + ": raw head " + std::to_string(f) +
                       " exceeds overflow guard " + std::to_string(kOverflowGuard));
  }
}

double clamp_head(double f) { return std::clamp(f, -kHeadClamp, kHeadClamp); }

// The clamp is part of the function being differentiated.
double clamp_ind(double f) { return (f >= -kHeadClamp && f <= kHeadClamp) ? 1.0 : 0.0; }

void require_count(const char* who, double y) {
  if (!(y >= 0.0) || std::floor(y) != y || !std::isfinite(y)) {
    throw DataError(std::string(who) + ": response " + std::to_string(y) +
                    " is not a non-negative integer count");
  }
}

}  // namespace

int heads_required(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::squared_error:
    case ObjectiveKind::logistic:
    case ObjectiveKind::poisson:
      return 1;
    case ObjectiveKind::zip:
    case ObjectiveKind::negative_binomial:
      return 2;
  }
  return 1;
}

bool is_count_objective(ObjectiveKind kind) {
  return kind == ObjectiveKind::poisson || kind == ObjectiveKind::zip ||
         kind == ObjectiveKind::negative_binomial;
}

const char* objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::squared_error: return "mse";
    case ObjectiveKind::logistic: return "logistic";
    case ObjectiveKind::poisson: return "poisson";
    case ObjectiveKind::zip: return "zip";
    case ObjectiveKind::negative_binomial: return "nb";
  }
  return "?";
}

ObjectiveKind parse_objective(const std::string& name) {
  if (name == "mse") return ObjectiveKind::squared_error;
  if (name == "logistic") return ObjectiveKind::logistic;
  if (name == "poisson") return ObjectiveKind::poisson;
  if (name == "zip") return ObjectiveKind::zip;
  if (name == "nb") return ObjectiveKind::negative_binomial;
  throw Error("unknown loss: " + name + " (expected mse|logistic|poisson|zip|nb)");
}

LossGrad1 squared_error_loss(double f, double y) {
  const double r = f - y;
  return {0.5 * r * r, r};
}

LossGrad1 logistic_nll(double f, double y) {
  if (y != 0.0 && y != 1.0) {
    throw DataError("logistic: response " + std::to_string(y) + " is not binary");
  }
  return {softplus(f) - y * f, sigmoid(f) - y};
}

LossGrad1 poisson_nll(double f, double y) {
  require_count("poisson", y);
  guard_head("poisson", f);
  const double cf = clamp_head(f);
  const double mu = std::exp(cf);
  return {mu - y * cf, (mu - y) * clamp_ind(f)};
}

LossGrad2 zip_nll(double f_mu, double f_pi, double y) {
  require_count("zip", y);
  guard_head("zip", f_mu);
  const double cf = clamp_head(f_mu);
  const double mu = std::exp(cf);
  const double ind = clamp_ind(f_mu);
  const double pi = sigmoid(f_pi);

  if (y == 0.0) {
    // P(0) = (1 - pi) + pi e^{-mu}, via log-sum-exp of the two branches.
    const double log_pi = -softplus(-f_pi);
    const double log_1mpi = -softplus(f_pi);
    const double a = log_1mpi;
    const double b = log_pi - mu;
    const double hi = std::max(a, b);
    const double log_p = hi + std::log(std::exp(a - hi) + std::exp(b - hi));
    const double zero_ratio = std::exp(b - log_p);  // pi e^{-mu} / P(0)
    const double d_mu = mu * zero_ratio * ind;
    const double d_pi = (1.0 - pi) * (std::exp(log_pi - log_p) - zero_ratio);
    return {-log_p, d_mu, d_pi};
  }

  const double loss = softplus(-f_pi) + mu - y * cf + std::lgamma(y + 1.0);
  return {loss, (mu - y) * ind, pi - 1.0};
}

LossGrad2 nb_nll(double f_mu, double f_phi, double y) {
  require_count("nb", y);
  guard_head("nb", f_mu);
  guard_head("nb", f_phi);
  const double cfm = clamp_head(f_mu);
  const double cfp = clamp_head(f_phi);
  const double mu = std::exp(cfm);
  const double phi = std::exp(cfp);
  const double log_total = std::log(mu + phi);

  const double loss = -(std::lgamma(y + phi) - std::lgamma(phi) - std::lgamma(y + 1.0) +
                        y * (cfm - log_total) + phi * (cfp - log_total));
  const double d_mu = (-y + mu * (y + phi) / (mu + phi)) * clamp_ind(f_mu);
  const double dphi = -digamma(y + phi) + digamma(phi) + (y + phi) / (mu + phi) -
                      (cfp - log_total) - 1.0;
  return {loss, d_mu, phi * dphi * clamp_ind(f_phi)};
}

double predicted_mean(ObjectiveKind kind, std::span<const double> heads) {
  switch (kind) {
    case ObjectiveKind::squared_error:
      return heads[0];
    case ObjectiveKind::logistic:
      return sigmoid(heads[0]);
    case ObjectiveKind::poisson:
      return std::exp(clamp_head(heads[0]));
    case ObjectiveKind::zip:
      return sigmoid(heads[1]) * std::exp(clamp_head(heads[0]));
    case ObjectiveKind::negative_binomial:
      return std::exp(clamp_head(heads[0]));
  }
  return 0.0;
}

BatchLoss batch_objective(ObjectiveKind kind, const Array& predictions,
                          const Array& responses, const std::vector<std::uint8_t>& mask) {
  if (predictions.rank() != 3) {
    throw ShapeError("batch_objective: predictions is " + shape_string(predictions) +
                     ", expected [B x T x k]");
  }
  const std::size_t batch = predictions.extent(0);
  const std::size_t tasks = predictions.extent(1);
  const std::size_t heads = predictions.extent(2);
  if (heads != static_cast<std::size_t>(heads_required(kind))) {
    throw ShapeError("batch_objective: " + std::string(objective_name(kind)) + " needs " +
                     std::to_string(heads_required(kind)) + " heads, predictions have " +
                     std::to_string(heads));
  }
  if (responses.rank() != 2 || responses.extent(0) != batch || responses.extent(1) != tasks) {
    throw ShapeError("batch_objective: responses is " + shape_string(responses) +
                     ", expected [" + std::to_string(batch) + " x " + std::to_string(tasks) + "]");
  }
  if (mask.size() != batch * tasks) {
    throw ShapeError("batch_objective: mask has " + std::to_string(mask.size()) +
                     " entries, expected " + std::to_string(batch * tasks));
  }

  BatchLoss result;
  result.output_grads = Array(predictions.shape());
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < tasks; ++t) {
      if (!mask[b * tasks + t]) continue;
      ++result.observed;
      const double y = responses(b, t);
      const double* f = predictions.data() + (b * tasks + t) * heads;
      double* g = result.output_grads.data() + (b * tasks + t) * heads;
      switch (kind) {
        case ObjectiveKind::squared_error: {
          const auto lg = squared_error_loss(f[0], y);
          total += lg.loss;
          g[0] = lg.d0;
          break;
        }
        case ObjectiveKind::logistic: {
          const auto lg = logistic_nll(f[0], y);
          total += lg.loss;
          g[0] = lg.d0;
          break;
        }
        case ObjectiveKind::poisson: {
          const auto lg = poisson_nll(f[0], y);
          total += lg.loss;
          g[0] = lg.d0;
          break;
        }
        case ObjectiveKind::zip: {
          const auto lg = zip_nll(f[0], f[1], y);
          total += lg.loss;
          g[0] = lg.d0;
          g[1] = lg.d1;
          break;
        }
        case ObjectiveKind::negative_binomial: {
          const auto lg = nb_nll(f[0], f[1], y);
          total += lg.loss;
          g[0] = lg.d0;
          g[1] = lg.d1;
          break;
        }
      }
    }
  }
  if (result.observed > 0) {
    const double inv = 1.0 / static_cast<double>(result.observed);
    result.loss = total * inv;
    for (double& g : result.output_grads.values()) g *= inv;
  }
  return result;
}

PenaltyResult closeness_penalty(const Array& split_weights, double lambda, bool depth_decay) {
  if (lambda < 0.0) {
    throw Error("closeness penalty: lambda must be non-negative, got " + std::to_string(lambda));
  }
  PenaltyResult result;
  result.split_grads = Array(split_weights.shape());
  const int tasks = static_cast<int>(split_weights.extent(1));
  if (lambda == 0.0 || tasks < 2) return result;

  const std::size_t block = split_weights.extent(2) * split_weights.extent(3);  // p * m
  const int internal = static_cast<int>(split_weights.extent(0));
  for (int i = 0; i < internal; ++i) {
    const double node_lambda = depth_decay ? lambda / static_cast<double>(1 << node_depth(i)) : lambda;
    const double* w = split_weights.data() + static_cast<std::size_t>(i) * tasks * block;
    double* g = result.split_grads.data() + static_cast<std::size_t>(i) * tasks * block;
    for (std::size_t e = 0; e < block; ++e) {
      double mean_sum = 0.0;
      for (int t = 0; t < tasks; ++t) mean_sum += w[t * block + e];
      for (int s = 0; s < tasks; ++s) {
        const double ws = w[s * block + e];
        for (int t = s + 1; t < tasks; ++t) {
          const double d = ws - w[t * block + e];
          result.penalty += node_lambda * d * d;
        }
        g[s * block + e] = 2.0 * node_lambda * (tasks * ws - mean_sum);
      }
    }
  }
  return result;
}

double digamma(double x) {
  if (!(x > 0.0)) throw NumericError("digamma: domain requires x > 0");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic expansion, accurate to ~1e-14 for x >= 6.
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
  return result;
}

}  // namespace softtree
