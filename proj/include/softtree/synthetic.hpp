#pragma once

#include <cstdint>
#include <string>

#include "softtree/dataio.hpp"

namespace softtree {

enum class GeneratorKind {
  two_clusters,       // binary classification, two Gaussian blobs
  linear_regression,  // y = x.w + noise
  zip_counts,         // zero-inflated Poisson counts
  nb_counts,          // negative binomial counts
  related_multitask,  // T regression tasks with shared latent weights
};

GeneratorKind parse_generator(const std::string& name);
const char* generator_name(GeneratorKind kind);

struct SyntheticSpec {
  GeneratorKind kind = GeneratorKind::linear_regression;
  std::size_t n = 1000;
  int features = 5;
  std::uint64_t seed = 0;

  double cluster_separation = 4.0;  // two_clusters: distance between centers
  double noise_sd = 0.1;            // regression noise

  // Count generators: base rates plus log/logit-linear links in the
  // first three features. link_scale drives the pi gate (and the nb
  // mean); link_scale_mu, when nonzero, gives the zip mean its own
  // slope. opposed_links points the mean link against the gate link,
  // which bends the marginal mean and separates the mixture heads.
  double pi_base = 0.7;   // P(count process active)
  double mu_base = 2.0;
  double link_scale = 0.0;
  double link_scale_mu = 0.0;
  bool opposed_links = false;
  double mu_cap = 0.0;    // 0 = uncapped
  double phi = 5.0;       // nb dispersion

  int tasks = 1;
  double relatedness = 0.9;  // 1 = identical task weights
  double missing_rate = 0.0;
};

// Deterministic given the seed; task columns are named y1..yT.
Dataset generate(const SyntheticSpec& spec);

}  // namespace softtree
