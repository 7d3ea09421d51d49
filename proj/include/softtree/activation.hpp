#pragma once

#include <cmath>
#include <string>

#include "softtree/error.hpp"

namespace softtree {

enum class ActivationKind { smooth_step, logistic };

// Routing activation S: R -> [0,1]. The smooth-step is the cubic that is
// C^1 with S(t) = 0 for t <= -gamma/2 and S(t) = 1 for t >= gamma/2; the
// exact saturation is what licenses skipping subtrees. The logistic
// variant is kept behind the same interface for ablations; it never
// saturates, so nothing is ever skipped.
struct Activation {
  ActivationKind kind = ActivationKind::smooth_step;
  double gamma = 1.0;

  double eval(double t) const {
    if (kind == ActivationKind::logistic) {
      return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                      : std::exp(t) / (1.0 + std::exp(t));
    }
    const double half = 0.5 * gamma;
    if (t <= -half) return 0.0;
    if (t >= half) return 1.0;
    const double c3 = -2.0 / (gamma * gamma * gamma);
    const double c1 = 1.5 / gamma;
    return c3 * t * t * t + c1 * t + 0.5;
  }

  double deriv(double t) const {
    if (kind == ActivationKind::logistic) {
      const double s = eval(t);
      return s * (1.0 - s);
    }
    const double half = 0.5 * gamma;
    if (t <= -half || t >= half) return 0.0;
    return -6.0 / (gamma * gamma * gamma) * t * t + 1.5 / gamma;
  }

  // True when eval can return exact 0/1, enabling conditional computation.
  bool saturates() const { return kind == ActivationKind::smooth_step; }

  void validate() const {
    if (!(gamma > 0.0)) {
      throw Error("activation: gamma must be positive, got " + std::to_string(gamma));
    }
  }
};

inline const char* activation_name(ActivationKind k) {
  return k == ActivationKind::smooth_step ? "smooth_step" : "logistic";
}

inline ActivationKind parse_activation(const std::string& name) {
  if (name == "smooth_step" || name == "smooth") return ActivationKind::smooth_step;
  if (name == "logistic") return ActivationKind::logistic;
  throw Error("unknown activation: " + name);
}

}  // namespace softtree
