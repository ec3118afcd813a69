#include <gtest/gtest.h>

#include <algorithm>

#include "occam/metrics.hpp"
#include "oracles.hpp"
#include "random_scenes.hpp"

using namespace occam;
using testutil::as_bits;
using testutil::as_ints;

namespace {

MaskSet masks_of(const InstanceSegmentation& seg) {
  MaskSet set;
  for (auto id : seg.instance_ids()) set.masks.push_back(seg.instance_mask(id));
  return set;
}

ResultRecord rec(int pred, int truth, std::optional<int> group = std::nullopt) {
  return ResultRecord{"x", pred, truth, group};
}

}  // namespace

TEST(FgAri, MatchesPairCountingOracle) {
  SplitMix64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const auto gt = testutil::random_instances(rng, 16, 16, 5);
    const auto pred = testutil::random_masks(rng, 16, 16, 6);
    EXPECT_NEAR(fg_ari(gt, pred), oracle::fg_ari(as_ints(gt), as_bits(pred)), 1e-9);
    EXPECT_NEAR(mbo(gt, pred), oracle::mbo(as_ints(gt), as_bits(pred)), 1e-9);
  }
}

TEST(FgAri, PerfectAndDegenerate) {
  SplitMix64 rng(2);
  const auto gt = testutil::random_instances(rng, 12, 12, 4);
  EXPECT_DOUBLE_EQ(fg_ari(gt, masks_of(gt)), 1.0);
  EXPECT_DOUBLE_EQ(mbo(gt, masks_of(gt)), 1.0);

  InstanceSegmentation one{3, 3, std::vector<std::int32_t>(9, 0)};
  one.labels[4] = 1;
  EXPECT_DOUBLE_EQ(fg_ari(one, MaskSet{}), 1.0);  // a single pixel
  EXPECT_DOUBLE_EQ(mbo(one, MaskSet{}), 0.0);

  InstanceSegmentation blank{3, 3, std::vector<std::int32_t>(9, 0)};
  EXPECT_THROW(fg_ari(blank, MaskSet{}), std::invalid_argument);
  EXPECT_THROW(mbo(blank, MaskSet{}), std::invalid_argument);
}

TEST(FgAri, SplittingOneObjectScoresZero) {
  InstanceSegmentation gt{1, 4, {1, 1, 1, 1}};
  MaskSet pred;
  pred.masks = {BinaryMask(1, 4, std::vector<std::uint8_t>{1, 1, 0, 0}),
                BinaryMask(1, 4, std::vector<std::uint8_t>{0, 0, 1, 1})};
  EXPECT_DOUBLE_EQ(fg_ari(gt, pred), 0.0);
}

TEST(FgAri, Invariances) {
  SplitMix64 rng(8);
  for (int t = 0; t < 30; ++t) {
    auto gt = testutil::random_instances(rng, 16, 16, 5);
    auto pred = testutil::random_masks(rng, 16, 16, 6);
    // only disjoint masks are order-free under the last-wins rule
    for (std::size_t k = 0; k < pred.size(); ++k) {
      for (std::size_t j = 0; j < k; ++j) {
        std::vector<std::uint8_t> bits(pred.masks[k].bits().begin(), pred.masks[k].bits().end());
        for (std::size_t p = 0; p < bits.size(); ++p)
          if (pred.masks[j].bits()[p]) bits[p] = 0;
        pred.masks[k] = BinaryMask(16, 16, std::move(bits));
      }
    }
    const double ari = fg_ari(gt, pred);
    const double bo = mbo(gt, pred);
    auto reversed = pred;
    std::reverse(reversed.masks.begin(), reversed.masks.end());
    EXPECT_NEAR(fg_ari(gt, reversed), ari, 1e-12);
    EXPECT_NEAR(mbo(gt, reversed), bo, 1e-12);

    auto relabeled = gt;
    for (auto& v : relabeled.labels)
      if (v > 0) v = 100 - v;
    EXPECT_NEAR(fg_ari(relabeled, pred), ari, 1e-12);
    EXPECT_NEAR(mbo(relabeled, pred), bo, 1e-12);

    // predictions on gt background do not matter
    auto extra = pred;
    BinaryMask bg(16, 16);
    for (int p = 0; p < 256; ++p)
      if (gt.labels[static_cast<std::size_t>(p)] == 0 && rng.bernoulli(0.5)) bg.set(p / 16, p % 16);
    extra.masks.push_back(bg);
    EXPECT_NEAR(fg_ari(gt, extra), ari, 1e-12);
  }
}

TEST(Mbo, ReplacingWithBestMatchDoesNotDecrease) {
  SplitMix64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const auto gt = testutil::random_instances(rng, 16, 16, 4);
    auto pred = testutil::random_masks(rng, 16, 16, 5);
    if (pred.empty()) continue;
    const double before = mbo(gt, pred);
    const auto id = gt.instance_ids().front();
    const auto m = gt.instance_mask(id);
    std::size_t best = 0;
    for (std::size_t k = 1; k < pred.size(); ++k)
      if (iou(m, pred.masks[k]) > iou(m, pred.masks[best])) best = k;
    pred.masks[best] = m;
    EXPECT_GE(mbo(gt, pred), before - 1e-12);
  }
}

TEST(Partition, LastMaskWins) {
  MaskSet pred;
  pred.masks = {BinaryMask(1, 3, std::vector<std::uint8_t>{1, 1, 0}),
                BinaryMask(1, 3, std::vector<std::uint8_t>{0, 1, 0})};
  EXPECT_EQ(partition_from_masks(pred, {1, 3}), (std::vector<std::int32_t>{0, 1, 2}));
}

TEST(Accuracy, WorstGroup) {
  GroupedResults res;
  res.records = {rec(1, 1, 0), rec(0, 1, 0), rec(1, 1, 1), rec(1, 1, 1), rec(0, 0, 2)};
  EXPECT_DOUBLE_EQ(accuracy(res), 0.8);
  const auto wg = worst_group_accuracy(res);
  EXPECT_DOUBLE_EQ(wg.wga, 0.5);
  EXPECT_EQ(wg.per_group.at(1).total, 2u);
  EXPECT_LE(wg.wga, accuracy(res));

  GroupedResults missing;
  missing.records = {rec(1, 1)};
  EXPECT_THROW(worst_group_accuracy(missing), std::invalid_argument);
  EXPECT_THROW(accuracy(GroupedResults{}), std::invalid_argument);
}

TEST(Accuracy, EqualGroupsGiveEqualWga) {
  GroupedResults res;
  res.records = {rec(1, 1, 0), rec(0, 1, 0), rec(1, 1, 1), rec(0, 1, 1)};
  EXPECT_DOUBLE_EQ(worst_group_accuracy(res).wga, accuracy(res));
}

TEST(Gap, CommonMinusCounter) {
  // 79.0 vs 62.0 gives a 17.0 point gap
  GroupedResults common, counter;
  for (int i = 0; i < 1000; ++i) {
    common.records.push_back(rec(i < 790 ? 1 : 0, 1));
    counter.records.push_back(rec(i < 620 ? 1 : 0, 1));
  }
  const auto g = common_counter_gap(common, counter);
  EXPECT_NEAR(g.gap, 0.17, 1e-12);
  EXPECT_DOUBLE_EQ(g.acc_common, 0.79);
  EXPECT_DOUBLE_EQ(g.acc_counter, 0.62);
}
