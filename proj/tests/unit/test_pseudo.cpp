#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hda/errors.hpp"
#include "hda/pseudo.hpp"
#include "test_support.hpp"

namespace hda {
namespace {

PseudoOptions with_epsilon(double eps) {
  PseudoOptions o;
  o.epsilon = eps;
  return o;
}

ModelParams small_model(std::uint64_t seed) {
  ModelConfig c;
  c.input_shape = {2};
  c.backbone_hidden = {8};
  c.phi_dim = 8;
  c.hidden = 8;
  return ModelParams::init(c, seed);
}

TEST(AssignFromProbs, ThresholdExamples) {
  const Dense probs = Dense::matrix(3, 2, {0.98, 0.02, 0.5, 0.5, 0.97, 0.03});
  const PseudoState s = assign_from_probs(probs, 1, with_epsilon(0.97));
  EXPECT_EQ(s.labels, (std::vector<int>{0, -1, -1}));
  EXPECT_EQ(s.assigned_epoch, (std::vector<int>{1, -1, -1}));
  EXPECT_DOUBLE_EQ(s.confidence[0], 0.98);
  EXPECT_EQ(s.labelled_count(), 1u);
}

TEST(AssignFromProbs, ReassignmentRevokesAndStickyKeeps) {
  const PseudoState first =
      assign_from_probs(Dense::matrix(1, 2, {0.01, 0.99}), 1, with_epsilon(0.97));
  ASSERT_EQ(first.labels[0], 1);
  const Dense unsure = Dense::matrix(1, 2, {0.4, 0.6});
  EXPECT_EQ(assign_from_probs(unsure, 2, with_epsilon(0.97), &first).labels[0], -1);
  PseudoOptions sticky = with_epsilon(0.97);
  sticky.sticky = true;
  const PseudoState kept = assign_from_probs(unsure, 2, sticky, &first);
  EXPECT_EQ(kept.labels[0], 1);
  EXPECT_EQ(kept.assigned_epoch[0], 1);
}

TEST(AssignPseudoLabels, LabelIsArgmaxOfInference) {
  std::mt19937_64 rng(1);
  const Dataset target = test::random_dataset(Domain::Target, 200, 2, 2, rng);
  const ModelParams p = small_model(1);
  const PseudoState s = assign_pseudo_labels(target, p, 0, with_epsilon(0.6));
  const std::vector<int> pred = predict(infer(p, target.feature_matrix()));
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (s.labels[i] != -1) {
      EXPECT_EQ(s.labels[i], pred[i]);
      EXPECT_GT(s.confidence[i], 0.6);
    }
  }
}

TEST(AssignPseudoLabels, MonotoneInEpsilon) {
  std::mt19937_64 rng(2);
  const Dataset target = test::random_dataset(Domain::Target, 300, 2, 2, rng);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ModelParams p = small_model(seed);
    PseudoState prev = assign_pseudo_labels(target, p, 0, with_epsilon(0.501));
    for (double eps = 0.55; eps < 1.0; eps += 0.05) {
      const PseudoState s = assign_pseudo_labels(target, p, 0, with_epsilon(eps));
      for (std::size_t i = 0; i < target.size(); ++i) {
        if (s.labels[i] != -1) {
          EXPECT_EQ(prev.labels[i], s.labels[i]);
        }
      }
      prev = s;
    }
  }
}

TEST(AssignPseudoLabels, EpsilonRangeIsChecked) {
  std::mt19937_64 rng(3);
  const Dataset target = test::random_dataset(Domain::Target, 5, 2, 2, rng);
  const ModelParams p = small_model(3);
  EXPECT_THROW(assign_pseudo_labels(target, p, 0, with_epsilon(0.5)), ContractError);
  EXPECT_THROW(assign_pseudo_labels(target, p, 0, with_epsilon(1.0)), ContractError);
}

TEST(Coverage, Limits) {
  std::mt19937_64 rng(4);
  const Dataset target = test::random_dataset(Domain::Target, 100, 2, 2, rng);
  const ModelParams p = small_model(4);
  EXPECT_EQ(pseudo_coverage(assign_pseudo_labels(target, p, 0, with_epsilon(0.5 + 1e-12))), 1.0);
  EXPECT_EQ(pseudo_coverage(PseudoState::unlabelled(10, 0.97)), 0.0);
  EXPECT_EQ(pseudo_coverage(assign_from_probs(Dense::matrix(2, 2, {0.99, 0.01, 0.5, 0.5}), 0,
                                              with_epsilon(0.97))),
            0.5);
}

TEST(Snapshot, AppendsRowsPerEpoch) {
  test::TempDir dir;
  std::mt19937_64 rng(5);
  const Dataset target = test::random_dataset(Domain::Target, 3, 2, 2, rng);
  const PseudoState s =
      assign_from_probs(Dense::matrix(3, 2, {0.99, 0.01, 0.5, 0.5, 0.1, 0.9}), 2, with_epsilon(0.8));
  append_pseudo_snapshot(dir / "p.csv", target, s);
  append_pseudo_snapshot(dir / "p.csv", target, s);
  const std::string text = test::read_bytes(dir / "p.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "id,label,confidence,epoch");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
  EXPECT_NE(text.find("\n0,0,0.99,2\n"), std::string::npos) << text;
}

}  // namespace
}  // namespace hda
