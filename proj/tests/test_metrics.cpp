#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "softtree/error.hpp"
#include "softtree/metrics.hpp"
#include "softtree/rng.hpp"

using namespace softtree;

TEST_CASE("mse") {
  const std::vector<double> y{1.0, 2.0, 3.0};
  CHECK(*mse(y, y) == 0.0);

  const std::vector<double> off{2.0, 3.0, 4.0};
  CHECK(*mse(off, y) == 1.0);

  const std::vector<double> pred{1.0, 2.0};
  const std::vector<double> truth{0.0, 4.0};
  CHECK(*mse(pred, truth) == doctest::Approx(2.5).epsilon(1e-15));

  const std::vector<std::uint8_t> none{0, 0};
  CHECK_FALSE(mse(pred, truth, none).has_value());
}

TEST_CASE("poisson deviance") {
  const std::vector<double> mu{1.0, 2.0, 3.5};
  CHECK(*poisson_deviance(mu, mu) == doctest::Approx(0.0).epsilon(1e-15));

  const std::vector<double> one{1.0};
  const std::vector<double> zero{0.0};
  CHECK(*poisson_deviance(one, zero) == doctest::Approx(2.0).epsilon(1e-15));

  const std::vector<double> two{2.0};
  CHECK(*poisson_deviance(one, two) ==
        doctest::Approx(2.0 * (2.0 * std::log(2.0) - 1.0)).epsilon(1e-12));

  const std::vector<double> bad{0.0};
  CHECK_THROWS_AS(poisson_deviance(bad, one), NumericError);
}

TEST_CASE("poisson deviance is non-negative and weighted") {
  Rng rng(81, 51);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<double> mu{rng.uniform(0.1, 5.0)};
    const std::vector<double> y{std::floor(rng.uniform(0.0, 6.0))};
    CHECK(*poisson_deviance(mu, y) >= -1e-12);
  }
  const std::vector<double> mu{1.0, 4.0};
  const std::vector<double> y{2.0, 1.0};
  const std::vector<double> w{2.0, 0.0};
  // Zero-weight entries drop out.
  const std::vector<double> mu1{1.0};
  const std::vector<double> y1{2.0};
  CHECK(*poisson_deviance(mu, y, {}, w) == doctest::Approx(*poisson_deviance(mu1, y1)));
}

TEST_CASE("auc") {
  const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
  const std::vector<double> lab{0.0, 0.0, 1.0, 1.0};
  CHECK(*auc(sep, lab) == 1.0);

  const std::vector<double> ties{0.5, 0.5, 0.5, 0.5};
  CHECK(*auc(ties, lab) == 0.5);

  const std::vector<double> hand{0.1, 0.4, 0.35, 0.8};
  const std::vector<double> hand_lab{0.0, 0.0, 1.0, 1.0};
  CHECK(*auc(hand, hand_lab) == 0.75);

  const std::vector<double> single{0.1, 0.4};
  const std::vector<double> pos_only{1.0, 1.0};
  CHECK_FALSE(auc(single, pos_only).has_value());
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(83, 52);
  std::vector<double> scores(50), labels(50), warped(50);
  for (int i = 0; i < 50; ++i) {
    scores[i] = rng.normal();
    labels[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    warped[i] = std::exp(3.0 * scores[i]) + 7.0;
  }
  labels[0] = 1.0;
  labels[1] = 0.0;
  CHECK(*auc(scores, labels) == doctest::Approx(*auc(warped, labels)).epsilon(1e-14));
}

TEST_CASE("masked rows never move a metric") {
  const std::vector<double> pred{1.0, 100.0, 2.0};
  const std::vector<double> y{1.5, -3.0, 2.5};
  const std::vector<std::uint8_t> mask{1, 0, 1};
  const std::vector<double> pred2{1.0, 2.0};
  const std::vector<double> y2{1.5, 2.5};
  CHECK(*mse(pred, y, mask) == *mse(pred2, y2));

  const std::vector<double> scores{0.3, 0.99, 0.7, 0.1};
  const std::vector<double> labels{0.0, 0.0, 1.0, 0.0};
  const std::vector<std::uint8_t> m2{1, 0, 1, 1};
  const std::vector<double> scores2{0.3, 0.7, 0.1};
  const std::vector<double> labels2{0.0, 1.0, 0.0};
  CHECK(*auc(scores, labels, m2) == *auc(scores2, labels2));
}
