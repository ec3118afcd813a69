#pragma once

// End-to-end object-centric classification: generate candidate masks,
// filter them, apply each to the image, encode and classify every applied
// mask with each ensemble member, score the candidates, keep the most
// foreground-like one and classify from it alone.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occam/backend.hpp"
#include "occam/core.hpp"
#include "occam/fgscore.hpp"
#include "occam/maskops.hpp"
#include "occam/metrics.hpp"
#include "occam/parallel.hpp"

namespace occam {

enum class Fallback { FullImageMask, Error };

struct OccamConfig {
  ApplicationMode application_mode = GrayBgCrop{};
  ScoringStrategy scoring = ScoringStrategy::EnsembleEntropy;
  FilterConfig filter;
  Fallback fallback = Fallback::FullImageMask;
  // ClassAided and GroundTruthIoU read labels; they are refused unless set.
  bool evaluation_mode = false;

  void validate() const;
};

struct OccamOutput {
  std::string sample_id;
  ClassProbabilities final_probs;
  int predicted = 0;  // label space (group when the head folds classes)
  int selected_mask_index = -1;
  std::vector<ScoredMask> all_scored;
  bool fallback_used = false;
};

// Steps 1-4: candidates with their member probabilities and scores. With
// the whole-image fallback the single entry has mask_index -1.
struct CandidateSet {
  std::vector<ScoredMask> scored;
  bool fallback_used = false;
};

CandidateSet score_candidates(const LabeledSample& sample, const MaskGenerator& maskgen, const EnsembleSpec& ens,
                              const OccamConfig& cfg);

// Steps 5-6: select the foreground candidate and classify from it.
OccamOutput finalize_selection(const LabeledSample& sample, CandidateSet candidates, const EnsembleSpec& ens);

OccamOutput occam_classify(const LabeledSample& sample, const MaskGenerator& maskgen, const EnsembleSpec& ens,
                           const OccamConfig& cfg);

// Ground-truth foreground mask for IoU scoring: the gt mask that best
// matches the box, the first gt mask without a box, or the box itself.
std::optional<BinaryMask> foreground_gt_mask(const LabeledSample& sample);

using SampleLoader = std::function<LabeledSample(std::size_t)>;

struct BenchmarkRun {
  GroupedResults results;
  std::vector<OccamOutput> log;  // sorted by sample id
  std::vector<std::pair<std::string, std::string>> errors;  // (sample id, message), sorted
  std::size_t n_requested = 0;
};

// Samples are processed on `threads` workers; the output does not depend on
// the thread count. `sample_ids[i]` names sample i for error reporting.
BenchmarkRun run_benchmark(std::size_t n_samples, const SampleLoader& load, std::span<const std::string> sample_ids,
                           const MaskGenerator& maskgen, const EnsembleSpec& ens, const OccamConfig& cfg,
                           unsigned threads = 1);
BenchmarkRun run_benchmark(std::span<const LabeledSample> samples, const MaskGenerator& maskgen,
                           const EnsembleSpec& ens, const OccamConfig& cfg, unsigned threads = 1);

// One JSON object per line: {id, scores[], selected, fallback, predicted, label, group}.
void write_audit_log(std::ostream& os, std::span<const OccamOutput> log, std::span<const ResultRecord> records);

}  // namespace occam
