#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "occam/fgscore.hpp"
#include "occam/random.hpp"
#include "oracles.hpp"

using namespace occam;

namespace {

ClassProbabilities P(std::vector<double> p) { return ClassProbabilities::from_probs(std::move(p)); }

ScoredMask scored(int index, double score) { return ScoredMask{index, score, {P({0.5, 0.5})}}; }

}  // namespace

TEST(ScoreMask, Examples) {
  ScoreAux aux;
  aux.label = 1;
  const std::vector<ClassProbabilities> one{P({0.1, 0.7, 0.2})};
  EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::ClassAided, one, aux), 0.7);
  EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::MaxProb, one), 0.7);
  EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::SingleConfidence, one), 0.7);

  const std::vector<ClassProbabilities> uniform{P({0.5, 0.5}), P({0.5, 0.5})};
  EXPECT_NEAR(score_mask(ScoringStrategy::EnsembleEntropy, uniform), -std::log(2.0), 1e-15);

  const std::vector<ClassProbabilities> opposed{P({1.0, 0.0}), P({0.0, 1.0})};
  EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::EnsembleConfidence, opposed), 0.5);
  // ClassAided averages over members
  aux.label = 0;
  EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::ClassAided, opposed, aux), 0.5);
}

TEST(ScoreMask, SingleMemberReductions) {
  SplitMix64 rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> logits(5);
    for (double& l : logits) l = rng.uniform(-3, 3);
    const std::vector<ClassProbabilities> m{softmax(logits)};
    EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::EnsembleEntropy, m), score_mask(ScoringStrategy::SingleEntropy, m));
    EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::EnsembleConfidence, m),
                     score_mask(ScoringStrategy::SingleConfidence, m));
  }
}

TEST(ScoreMask, GroupedClassAidedAndErrors) {
  const std::vector<int> groups{0, 0, 1};
  ScoreAux aux;
  aux.label = 0;
  aux.class_to_label = &groups;
  const std::vector<ClassProbabilities> one{P({0.1, 0.3, 0.6})};
  EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::ClassAided, one, aux), 0.4);
  EXPECT_THROW(score_mask(ScoringStrategy::ClassAided, one), std::invalid_argument);
  EXPECT_THROW(score_mask(ScoringStrategy::GroundTruthIoU, one), std::invalid_argument);
  EXPECT_THROW(score_mask(ScoringStrategy::MaxProb, {}), std::invalid_argument);
}

TEST(ScoreMask, GroundTruthIou) {
  BinaryMask a(2, 2), b(2, 2);
  a.set(0, 0);
  a.set(0, 1);
  b.set(0, 0);
  ScoreAux aux;
  aux.candidate_mask = &a;
  aux.gt_mask = &b;
  const std::vector<ClassProbabilities> one{P({0.5, 0.5})};
  EXPECT_DOUBLE_EQ(score_mask(ScoringStrategy::GroundTruthIoU, one, aux), 0.5);
}

TEST(Strategies, NamesRoundTrip) {
  for (auto s : all_strategies()) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("nope"), std::invalid_argument);
}

TEST(Select, ArgmaxAndTies) {
  EXPECT_EQ(select_foreground(std::vector<ScoredMask>{scored(0, 0.2), scored(1, 0.9), scored(2, 0.5)}), 1);
  EXPECT_EQ(select_foreground(std::vector<ScoredMask>{scored(0, 0.4), scored(1, 0.4)}), 0);
  // the tie rule follows mask_index, not position
  EXPECT_EQ(select_foreground(std::vector<ScoredMask>{scored(5, 0.4), scored(2, 0.4)}), 2);
  EXPECT_THROW(select_foreground(std::vector<ScoredMask>{}), std::invalid_argument);
}

TEST(Roc, Examples) {
  std::vector<LabeledScore> perfect{{1, 1.0}, {1, 1.0}, {0, 0.0}, {0, 0.0}};
  EXPECT_DOUBLE_EQ(roc_auc(perfect).auroc, 1.0);
  std::vector<LabeledScore> flat{{1, 0.3}, {0, 0.3}, {0, 0.3}};
  EXPECT_DOUBLE_EQ(roc_auc(flat).auroc, 0.5);
  EXPECT_THROW(roc_auc(std::vector<LabeledScore>{{1, 0.1}, {1, 0.2}}), std::invalid_argument);
  const auto roc = roc_auc(perfect);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
}

TEST(Roc, PairwiseOracleAndProperties) {
  SplitMix64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const int n = rng.uniform_int(2, 200);
    std::vector<LabeledScore> recs;
    std::vector<int> labels;
    std::vector<double> scores;
    for (int i = 0; i < n; ++i) {
      const int y = i == 0 ? 1 : i == 1 ? 0 : static_cast<int>(rng.bernoulli(0.4));
      const double s = std::round(rng.uniform(0, 10));  // many ties
      recs.push_back({y, s});
      labels.push_back(y);
      scores.push_back(s);
    }
    const double a = roc_auc(recs).auroc;
    EXPECT_NEAR(a, oracle::pairwise_auroc(labels, scores), 1e-12);
    auto flipped = recs;
    for (auto& r : flipped) r.label = 1 - r.label;
    EXPECT_NEAR(roc_auc(flipped).auroc, 1.0 - a, 1e-12);
    auto cubed = recs;
    for (auto& r : cubed) r.score = std::exp(r.score);
    EXPECT_NEAR(roc_auc(cubed).auroc, a, 1e-12);
  }
}

TEST(Roc, FrozenValue) {
  // pairwise count: positives {0.9, 0.4, 0.4}, negatives {0.4, 0.1}
  // wins = 2 + (0.5 + 1) * 2 = 5 of 6
  std::vector<LabeledScore> recs{{1, 0.9}, {1, 0.4}, {1, 0.4}, {0, 0.4}, {0, 0.1}};
  EXPECT_NEAR(roc_auc(recs).auroc, 5.0 / 6.0, 1e-15);
  std::ostringstream os;
  write_roc_csv(os, roc_auc(recs));
  EXPECT_EQ(os.str().rfind("fpr,tpr\n0,0\n", 0), 0u);
}

TEST(FgDataset, LabelsBestIouAndSkips) {
  LabeledSample s;
  s.id = "a";
  s.dims = {4, 4};
  s.gt_bbox = BBox{0, 0, 2, 2};
  MaskSet ms;
  ms.masks = {BinaryMask::from_bbox({4, 4}, {2, 2, 4, 4}), BinaryMask::from_bbox({4, 4}, {0, 0, 2, 2})};
  LabeledSample none = s;
  none.id = "b";
  none.gt_bbox.reset();
  LabeledSample far = s;
  far.id = "c";
  far.gt_bbox = BBox{0, 3, 1, 4};
  MaskSet far_ms;
  far_ms.masks = {BinaryMask::from_bbox({4, 4}, {3, 0, 4, 1}), BinaryMask::from_bbox({4, 4}, {2, 0, 3, 1})};

  const std::vector<LabeledSample> samples{s, none, far};
  const std::vector<MaskSet> sets{ms, ms, far_ms};
  const std::vector<std::vector<double>> scores{{0.1, 0.8}, {0.0, 0.0}, {0.3, 0.2}};
  const auto ds = build_fg_dataset(samples, sets, scores);
  EXPECT_EQ(ds.skipped_missing_bbox, 1u);
  ASSERT_EQ(ds.records.size(), 4u);
  EXPECT_EQ(ds.records[0].label, 0);
  EXPECT_EQ(ds.records[1].label, 1);
  EXPECT_DOUBLE_EQ(ds.records[1].score, 0.8);
  EXPECT_EQ(ds.records[2].label, 1);  // all IoU 0: index 0 by tie-break
  EXPECT_EQ(ds.degenerate_samples, std::vector<std::string>{"c"});
}
