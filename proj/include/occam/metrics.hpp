#pragma once

// Object-discovery metrics (FG-ARI, mBO) and classification metrics
// (accuracy, worst-group accuracy, common/counter gap).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occam/core.hpp"

namespace occam {

// Per-pixel instance ids: 0 is background, k > 0 is instance k.
struct InstanceSegmentation {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> labels;

  ImageDims dims() const { return {height, width}; }
  std::int32_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
  // Sorted distinct positive ids.
  std::vector<std::int32_t> instance_ids() const;
  BinaryMask instance_mask(std::int32_t id) const;
  void validate() const;
};

// Per-pixel cluster assignment of a (possibly overlapping) mask set: the
// last covering mask wins, uncovered pixels form cluster masks.size().
std::vector<std::int32_t> partition_from_masks(const MaskSet& pred, ImageDims dims);

double fg_ari(const InstanceSegmentation& gt, const MaskSet& pred);
double mbo(const InstanceSegmentation& gt, const MaskSet& pred);

struct ResultRecord {
  std::string sample_id;
  int predicted = 0;
  int truth = 0;
  std::optional<int> group;
};

struct GroupedResults {
  std::vector<ResultRecord> records;
};

struct GroupAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

double accuracy(const GroupedResults& results);

struct WorstGroup {
  double wga = 0.0;
  std::map<int, GroupAccuracy> per_group;
};

WorstGroup worst_group_accuracy(const GroupedResults& results);

struct GapResult {
  double gap = 0.0;  // acc_common - acc_counter
  double acc_common = 0.0;
  double acc_counter = 0.0;
};

GapResult common_counter_gap(const GroupedResults& common, const GroupedResults& counter);

}  // namespace occam
