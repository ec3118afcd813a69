#pragma once

// Foreground scoring, foreground selection, and the bounding-box driven
// foreground-detection benchmark with its ROC analysis.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occam/core.hpp"

namespace occam {

enum class ScoringStrategy {
  ClassAided,
  EnsembleEntropy,
  EnsembleConfidence,
  SingleConfidence,
  SingleEntropy,
  MaxProb,
  GroundTruthIoU,
};

const char* to_string(ScoringStrategy s);
ScoringStrategy parse_strategy(std::string_view name);
std::vector<ScoringStrategy> all_strategies();

// Inputs some strategies need besides the member probabilities.
struct ScoreAux {
  std::optional<int> label;
  // When set, ClassAided scores p^label as the summed probability of all
  // classes mapped to `label`.
  const std::vector<int>* class_to_label = nullptr;
  const BinaryMask* candidate_mask = nullptr;
  const BinaryMask* gt_mask = nullptr;
};

// Higher means more foreground for every strategy: entropy based scores are
// negated here.
double score_mask(ScoringStrategy strategy, std::span<const ClassProbabilities> member_probs,
                  const ScoreAux& aux = {});

struct ScoredMask {
  int mask_index = -1;
  double score = 0.0;
  std::vector<ClassProbabilities> per_member_probs;
};

// Position (not mask_index) of the best-scoring entry in `scored`; ties go
// to the lowest mask_index. Throws on empty input.
std::size_t select_foreground_position(std::span<const ScoredMask> scored);
int select_foreground(std::span<const ScoredMask> scored);

struct FgRecord {
  std::string sample_id;
  int mask_index = 0;
  int label = 0;
  double score = 0.0;
};

struct FgDetectionDataset {
  std::vector<FgRecord> records;
  std::size_t skipped_missing_bbox = 0;
  // Samples where every candidate had IoU 0 with the box; the positive went to index 0.
  std::vector<std::string> degenerate_samples;
};

// Per sample: labels the candidate with the highest IoU against the box as
// foreground. `scores[i][k]` is the score of candidate k of sample i;
// candidate k is reported with mask index `mask_indices[i][k]` when given.
FgDetectionDataset build_fg_dataset(std::span<const LabeledSample> samples, std::span<const MaskSet> masksets,
                                    std::span<const std::vector<double>> scores,
                                    std::span<const std::vector<int>> mask_indices = {});

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auroc = 0.0;
  std::vector<RocPoint> points;  // ascending fpr, (0,0) to (1,1)
};

struct LabeledScore {
  int label = 0;  // 1 positive, 0 negative
  double score = 0.0;
};

RocResult roc_auc(std::span<const LabeledScore> records);

void write_roc_csv(std::ostream& os, const RocResult& roc);

}  // namespace occam
