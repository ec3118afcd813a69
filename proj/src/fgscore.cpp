#include "occam/fgscore.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace occam {

namespace {

struct StrategyName {
  ScoringStrategy strategy;
  const char* name;
};

constexpr StrategyName kStrategyNames[] = {
    {ScoringStrategy::ClassAided, "class_aided"},
    {ScoringStrategy::EnsembleEntropy, "ensemble_entropy"},
    {ScoringStrategy::EnsembleConfidence, "ensemble_confidence"},
    {ScoringStrategy::SingleConfidence, "single_confidence"},
    {ScoringStrategy::SingleEntropy, "single_entropy"},
    {ScoringStrategy::MaxProb, "max_prob"},
    {ScoringStrategy::GroundTruthIoU, "ground_truth_iou"},
};

std::vector<double> mean_probs(std::span<const ClassProbabilities> members) {
  std::vector<double> mean(members.front().num_classes(), 0.0);
  for (const auto& p : members) {
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());
  return mean;
}

double label_probability(const ClassProbabilities& p, int label, const std::vector<int>* class_to_label) {
  if (class_to_label == nullptr) {
    if (label < 0 || static_cast<std::size_t>(label) >= p.num_classes()) {
      throw std::invalid_argument("class-aided score: label out of range");
    }
    return p[static_cast<std::size_t>(label)];
  }
  if (class_to_label->size() != p.num_classes()) {
    throw std::invalid_argument("class-aided score: class map does not cover the class set");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < p.num_classes(); ++c) {
    if ((*class_to_label)[c] == label) sum += p[c];
  }
  return sum;
}

}  // namespace

const char* to_string(ScoringStrategy s) {
  for (const auto& e : kStrategyNames) {
    if (e.strategy == s) return e.name;
  }
  return "unknown";
}

ScoringStrategy parse_strategy(std::string_view name) {
  for (const auto& e : kStrategyNames) {
    if (name == e.name) return e.strategy;
  }
  throw std::invalid_argument("unknown scoring strategy '" + std::string(name) + "'");
}

std::vector<ScoringStrategy> all_strategies() {
  std::vector<ScoringStrategy> out;
  for (const auto& e : kStrategyNames) out.push_back(e.strategy);
  return out;
}

double score_mask(ScoringStrategy strategy, std::span<const ClassProbabilities> members, const ScoreAux& aux) {
  if (strategy == ScoringStrategy::GroundTruthIoU) {
    if (aux.candidate_mask == nullptr || aux.gt_mask == nullptr) {
      throw std::invalid_argument("ground-truth IoU score needs candidate and ground-truth masks");
    }
    return iou(*aux.candidate_mask, *aux.gt_mask);
  }
  if (members.empty()) throw std::invalid_argument("score_mask: empty member list");
  const std::size_t k = members.front().num_classes();
  for (const auto& p : members) {
    if (p.num_classes() != k) throw std::invalid_argument("score_mask: members disagree on the class set");
  }

  switch (strategy) {
    case ScoringStrategy::ClassAided: {
      if (!aux.label) throw std::invalid_argument("class-aided score needs the ground-truth label");
      double sum = 0.0;
      for (const auto& p : members) sum += label_probability(p, *aux.label, aux.class_to_label);
      return sum / static_cast<double>(members.size());
    }
    case ScoringStrategy::EnsembleEntropy: {
      double sum = 0.0;
      for (const auto& p : members) sum += entropy(p);
      return -sum / static_cast<double>(members.size());
    }
    case ScoringStrategy::EnsembleConfidence: {
      const auto mean = mean_probs(members);
      return *std::max_element(mean.begin(), mean.end());
    }
    case ScoringStrategy::SingleConfidence:
    case ScoringStrategy::MaxProb: {
      const auto& p = members.front().probs();
      return *std::max_element(p.begin(), p.end());
    }
    case ScoringStrategy::SingleEntropy:
      return -entropy(members.front());
    case ScoringStrategy::GroundTruthIoU:
      break;
  }
  throw std::logic_error("unhandled scoring strategy");
}

std::size_t select_foreground_position(std::span<const ScoredMask> scored) {
  if (scored.empty()) throw std::invalid_argument("no candidate masks");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    const auto& a = scored[i];
    const auto& b = scored[best];
    if (a.score > b.score || (a.score == b.score && a.mask_index < b.mask_index)) best = i;
  }
  return best;
}

int select_foreground(std::span<const ScoredMask> scored) {
  return scored[select_foreground_position(scored)].mask_index;
}

FgDetectionDataset build_fg_dataset(std::span<const LabeledSample> samples, std::span<const MaskSet> masksets,
                                    std::span<const std::vector<double>> scores,
                                    std::span<const std::vector<int>> mask_indices) {
  if (masksets.size() != samples.size() || scores.size() != samples.size()) {
    throw std::invalid_argument("build_fg_dataset: samples, mask sets and scores differ in length");
  }
  if (!mask_indices.empty() && mask_indices.size() != samples.size()) {
    throw std::invalid_argument("build_fg_dataset: mask index table differs in length");
  }
  FgDetectionDataset out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto& ms = masksets[i];
    if (!s.gt_bbox) {
      ++out.skipped_missing_bbox;
      continue;
    }
    if (ms.empty()) throw std::invalid_argument("sample " + s.id + " has no candidate masks");
    if (scores[i].size() != ms.size()) {
      throw std::invalid_argument("sample " + s.id + ": score count does not match candidate count");
    }
    const auto box = BinaryMask::from_bbox(s.dims, *s.gt_bbox);
    std::size_t best = 0;
    double best_iou = -1.0;
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const double v = iou(ms.masks[k], box);
      if (v > best_iou) {
        best_iou = v;
        best = k;
      }
    }
    if (best_iou <= 0.0) out.degenerate_samples.push_back(s.id);
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const int idx = mask_indices.empty() ? static_cast<int>(k) : mask_indices[i][k];
      out.records.push_back({s.id, idx, k == best ? 1 : 0, scores[i][k]});
    }
  }
  return out;
}

RocResult roc_auc(std::span<const LabeledScore> records) {
  std::size_t pos = 0;
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) throw std::invalid_argument("AUROC: non-finite score");
    if (r.label != 0 && r.label != 1) throw std::invalid_argument("AUROC: labels must be 0 or 1");
    pos += r.label == 1 ? 1 : 0;
  }
  const std::size_t neg = records.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("AUROC undefined: only one class present");

  std::vector<LabeledScore> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });

  RocResult out;
  out.points.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t dtp = 0;
    std::size_t dfp = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label == 1 ? dtp : dfp) += 1;
      ++j;
    }
    // Trapezoid in integer units: a tied block contributes dfp * (2 tp + dtp) / 2.
    area += static_cast<double>(dfp) * (2.0 * static_cast<double>(tp) + static_cast<double>(dtp)) / 2.0;
    tp += dtp;
    fp += dfp;
    out.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
    i = j;
  }
  out.auroc = area / (static_cast<double>(pos) * static_cast<double>(neg));
  return out;
}

void write_roc_csv(std::ostream& os, const RocResult& roc) {
  os << "fpr,tpr\n";
  os << std::setprecision(17);
  for (const auto& p : roc.points) os << p.fpr << ',' << p.tpr << '\n';
}

}  // namespace occam
