#include "softtree/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "softtree/error.hpp"
#include "softtree/rng.hpp"

namespace softtree {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Knuth's product method; fine for the small means used here.
std::uint64_t poisson_draw(Rng& rng, double mu) {
  if (mu <= 0.0) return 0;
  const double limit = std::exp(-mu);
  double prod = rng.next_open_unit();
  std::uint64_t k = 0;
  while (prod > limit) {
    prod *= rng.next_open_unit();
    ++k;
  }
  return k;
}

// Marsaglia-Tsang, with the shape<1 boost.
double gamma_draw(Rng& rng, double shape, double scale) {
  if (shape < 1.0) {
    const double u = rng.next_open_unit();
    return gamma_draw(rng, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.next_open_unit();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v * scale;
    }
  }
}

std::uint64_t negative_binomial_draw(Rng& rng, double mu, double phi) {
  // Gamma-Poisson mixture: y ~ Poisson(G), G ~ Gamma(phi, mu/phi).
  const double g = gamma_draw(rng, phi, mu / phi);
  return poisson_draw(rng, g);
}

std::vector<double> unit_weights(Rng& rng, int p) {
  std::vector<double> w(p);
  for (int f = 0; f < p; ++f) w[f] = rng.normal();
  double norm = 0.0;
  for (double v : w) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& v : w) v /= norm;
  }
  return w;
}

Dataset make_frame(std::size_t n, int p, int tasks) {
  Dataset data;
  data.features = Array({n, static_cast<std::size_t>(p)});
  data.responses = Array({n, static_cast<std::size_t>(tasks)});
  data.mask.assign(n * static_cast<std::size_t>(tasks), 1);
  for (int f = 0; f < p; ++f) data.feature_names.push_back("x" + std::to_string(f + 1));
  for (int t = 0; t < tasks; ++t) data.task_names.push_back("y" + std::to_string(t + 1));
  return data;
}

void fill_standard_normal(Dataset& data, Rng& rng) {
  for (double& v : data.features.values()) v = rng.normal();
}

}  // namespace

GeneratorKind parse_generator(const std::string& name) {
  if (name == "two_clusters") return GeneratorKind::two_clusters;
  if (name == "linear") return GeneratorKind::linear_regression;
  if (name == "zip") return GeneratorKind::zip_counts;
  if (name == "nb") return GeneratorKind::nb_counts;
  if (name == "multitask") return GeneratorKind::related_multitask;
  throw Error("unknown generator: " + name +
              " (expected two_clusters|linear|zip|nb|multitask)");
}

const char* generator_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::two_clusters: return "two_clusters";
    case GeneratorKind::linear_regression: return "linear";
    case GeneratorKind::zip_counts: return "zip";
    case GeneratorKind::nb_counts: return "nb";
    case GeneratorKind::related_multitask: return "multitask";
  }
  return "?";
}

Dataset generate(const SyntheticSpec& spec) {
  if (spec.n == 0 || spec.features < 1) throw Error("generate: need n > 0 and features > 0");
  const int p = spec.features;
  Rng base(spec.seed, streams::kSynthetic);

  switch (spec.kind) {
    case GeneratorKind::two_clusters: {
      Dataset data = make_frame(spec.n, p, 1);
      Rng rng = base.substream(0);
      const double offset = 0.5 * spec.cluster_separation / std::sqrt(2.0);
      for (std::size_t i = 0; i < spec.n; ++i) {
        const bool positive = rng.bernoulli(0.5);
        for (int f = 0; f < p; ++f) {
          double v = rng.normal();
          if (f < 2) v += (positive ? offset : -offset);
          data.features(i, static_cast<std::size_t>(f)) = v;
        }
        data.responses(i, 0) = positive ? 1.0 : 0.0;
      }
      return data;
    }

    case GeneratorKind::linear_regression: {
      Dataset data = make_frame(spec.n, p, 1);
      Rng wrng = base.substream(1);
      const std::vector<double> w = unit_weights(wrng, p);
      Rng rng = base.substream(0);
      fill_standard_normal(data, rng);
      Rng noise = base.substream(2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        double v = 0.0;
        for (int f = 0; f < p; ++f) v += w[f] * data.features(i, static_cast<std::size_t>(f));
        data.responses(i, 0) = v + spec.noise_sd * noise.normal();
      }
      return data;
    }

    case GeneratorKind::zip_counts: {
      if (p < 3) throw Error("generate: zip needs at least 3 features");
      Dataset data = make_frame(spec.n, p, 1);
      Rng rng = base.substream(0);
      fill_standard_normal(data, rng);
      Rng wrng = base.substream(1);
      const std::vector<double> w_pi = unit_weights(wrng, 3);
      std::vector<double> w_mu = unit_weights(wrng, 3);
      if (spec.opposed_links) {
        for (int f = 0; f < 3; ++f) w_mu[f] = -w_pi[f];
      }
      const double mu_scale = spec.link_scale_mu != 0.0 ? spec.link_scale_mu : spec.link_scale;
      const double pi_intercept = std::log(spec.pi_base / (1.0 - spec.pi_base));
      const double mu_intercept = std::log(spec.mu_base);
      Rng draw = base.substream(2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        double lin_pi = pi_intercept, lin_mu = mu_intercept;
        for (int f = 0; f < 3; ++f) {
          lin_pi += spec.link_scale * w_pi[f] * data.features(i, static_cast<std::size_t>(f));
          lin_mu += mu_scale * w_mu[f] * data.features(i, static_cast<std::size_t>(f));
        }
        const double pi = sigmoid(lin_pi);
        double mu = std::exp(lin_mu);
        if (spec.mu_cap > 0.0) mu = std::min(mu, spec.mu_cap);
        const bool active = draw.bernoulli(pi);
        data.responses(i, 0) =
            active ? static_cast<double>(poisson_draw(draw, mu)) : 0.0;
      }
      return data;
    }

    case GeneratorKind::nb_counts: {
      if (p < 3) throw Error("generate: nb needs at least 3 features");
      Dataset data = make_frame(spec.n, p, 1);
      Rng rng = base.substream(0);
      fill_standard_normal(data, rng);
      Rng wrng = base.substream(1);
      const std::vector<double> w_mu = unit_weights(wrng, 3);
      const double mu_intercept = std::log(spec.mu_base);
      Rng draw = base.substream(2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        double lin_mu = mu_intercept;
        for (int f = 0; f < 3; ++f) {
          lin_mu += spec.link_scale * w_mu[f] * data.features(i, static_cast<std::size_t>(f));
        }
        double mu = std::exp(lin_mu);
        if (spec.mu_cap > 0.0) mu = std::min(mu, spec.mu_cap);
        data.responses(i, 0) = static_cast<double>(negative_binomial_draw(draw, mu, spec.phi));
      }
      return data;
    }

    case GeneratorKind::related_multitask: {
      if (spec.tasks < 1) throw Error("generate: multitask needs tasks >= 1");
      Dataset data = make_frame(spec.n, p, spec.tasks);
      Rng rng = base.substream(0);
      fill_standard_normal(data, rng);
      Rng wrng = base.substream(1);
      const std::vector<double> shared = unit_weights(wrng, p);
      const double rho = std::clamp(spec.relatedness, 0.0, 1.0);
      std::vector<std::vector<double>> task_w(spec.tasks);
      for (int t = 0; t < spec.tasks; ++t) {
        const std::vector<double> own = unit_weights(wrng, p);
        task_w[t].resize(p);
        for (int f = 0; f < p; ++f) {
          task_w[t][f] = rho * shared[f] + std::sqrt(1.0 - rho * rho) * own[f];
        }
      }
      Rng noise = base.substream(2);
      Rng miss = base.substream(3);
      for (std::size_t i = 0; i < spec.n; ++i) {
        for (int t = 0; t < spec.tasks; ++t) {
          double v = 0.0;
          for (int f = 0; f < p; ++f) v += task_w[t][f] * data.features(i, static_cast<std::size_t>(f));
          data.responses(i, static_cast<std::size_t>(t)) = v + spec.noise_sd * noise.normal();
          if (spec.missing_rate > 0.0 && miss.bernoulli(spec.missing_rate)) {
            data.mask[i * static_cast<std::size_t>(spec.tasks) + t] = 0;
            data.responses(i, static_cast<std::size_t>(t)) = 0.0;
          }
        }
      }
      return data;
    }
  }
  throw Error("generate: unreachable");
}

}  // namespace softtree
