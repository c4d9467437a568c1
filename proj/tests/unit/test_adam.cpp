#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hda/adam.hpp"
#include "test_support.hpp"

namespace hda {
namespace {

// Oracle: textbook scalar Adam with coupled L2.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double theta, double g, const AdamConfig& c) {
    g += c.weight_decay * theta;
    ++t;
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double mh = m / (1.0 - std::pow(c.beta1, t));
    const double vh = v / (1.0 - std::pow(c.beta2, t));
    return theta - c.learning_rate * mh / (std::sqrt(vh) + c.eps);
  }
};

TEST(Adam, FirstStepHandComputed) {
  Parameter p("x", Dense::scalar(1.0));
  p.grad = Dense::scalar(1.0);
  std::vector<Parameter*> ps{&p};
  AdamState s = AdamState::for_parameters(ps);
  AdamConfig c;
  c.weight_decay = 0.0;
  adam_step(ps, s, c);
  // m̂ = v̂ = 1 after bias correction: step = lr / (1 + eps).
  EXPECT_NEAR(p.value.data[0], 1.0 - 1e-3 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value.data[0], 0.999, 1e-9);
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, ZeroGradientZeroDecayLeavesParameter) {
  Parameter p("x", Dense({3}, {1.0, -2.0, 0.5}));
  p.grad = Dense({3});
  std::vector<Parameter*> ps{&p};
  AdamState s = AdamState::for_parameters(ps);
  AdamConfig c;
  c.weight_decay = 0.0;
  for (int i = 0; i < 5; ++i) adam_step(ps, s, c);
  EXPECT_EQ(p.value.data, (std::vector<double>{1.0, -2.0, 0.5}));
}

TEST(Adam, MatchesScalarOracleWithDecay) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  AdamConfig c;
  c.weight_decay = 0.01;
  c.learning_rate = 0.05;
  Parameter p("x", Dense({4}, {0.3, -1.0, 2.0, 0.0}));
  std::vector<Parameter*> ps{&p};
  AdamState s = AdamState::for_parameters(ps);
  std::vector<ScalarAdam> oracle(4);
  std::vector<double> theta = p.value.data;
  for (int step = 0; step < 50; ++step) {
    p.grad = Dense({4});
    for (std::size_t i = 0; i < 4; ++i) {
      p.grad.data[i] = n(rng);
      theta[i] = oracle[i].step(theta[i], p.grad.data[i], c);
    }
    adam_step(ps, s, c);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p.value.data[i], theta[i], 1e-13);
  }
}

TEST(Adam, NonzeroGradientMovesParameter) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Dense v0 = test::random_dense({3}, rng);
    Parameter p("x", v0);
    p.grad = test::random_dense({3}, rng, 0.1, 1.0);
    std::vector<Parameter*> ps{&p};
    AdamState s = AdamState::for_parameters(ps);
    adam_step(ps, s, AdamConfig{});
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(p.value.data[i], v0.data[i]);
  }
}

TEST(Adam, OnlyEntriesWithGradientMoveWithoutDecay) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution zero(0.4);
  AdamConfig c;
  c.weight_decay = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Parameter p("x", test::random_dense({4, 3}, rng));
    p.grad = test::random_dense({4, 3}, rng);
    for (double& g : p.grad.data) {
      if (zero(rng)) g = 0.0;
    }
    const Dense before = p.value;
    std::vector<Parameter*> ps{&p};
    AdamState s = AdamState::for_parameters(ps);
    adam_step(ps, s, c);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (p.grad.data[i] == 0.0) {
        EXPECT_EQ(p.value.data[i], before.data[i]);
      } else {
        EXPECT_NE(p.value.data[i], before.data[i]);
      }
    }
  }
}

TEST(Adam, DeterministicAcrossRuns) {
  auto run = [] {
    std::mt19937_64 rng(3);
    Parameter p("x", test::random_dense({2, 2}, rng));
    std::vector<Parameter*> ps{&p};
    AdamState s = AdamState::for_parameters(ps);
    for (int i = 0; i < 20; ++i) {
      p.grad = test::random_dense({2, 2}, rng);
      adam_step(ps, s, AdamConfig{});
    }
    return p.value;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace hda
