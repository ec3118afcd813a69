#include "occam/pipeline.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace occam {

namespace {

bool needs_label(ScoringStrategy s) {
  return s == ScoringStrategy::ClassAided || s == ScoringStrategy::GroundTruthIoU;
}

ClassProbabilities mean_of(std::span<const ClassProbabilities> members) {
  if (members.size() == 1) return members.front();
  std::vector<double> mean(members.front().num_classes(), 0.0);
  for (const auto& p : members)
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  for (double& v : mean) v /= static_cast<double>(members.size());
  return ClassProbabilities::from_probs(std::move(mean));
}

}  // namespace

void OccamConfig::validate() const {
  occam::validate(application_mode);
  filter.validate();
  if (needs_label(scoring) && !evaluation_mode) {
    throw std::invalid_argument(std::string("scoring strategy ") + to_string(scoring) +
                                " reads ground-truth labels and is only allowed in evaluation mode");
  }
}

std::optional<BinaryMask> foreground_gt_mask(const LabeledSample& sample) {
  if (sample.gt_masks && !sample.gt_masks->empty()) {
    if (!sample.gt_bbox) return sample.gt_masks->masks.front();
    const auto box = BinaryMask::from_bbox(sample.dims, *sample.gt_bbox);
    std::size_t best = 0;
    double best_iou = -1.0;
    for (std::size_t k = 0; k < sample.gt_masks->size(); ++k) {
      const double v = iou(sample.gt_masks->masks[k], box);
      if (v > best_iou) {
        best_iou = v;
        best = k;
      }
    }
    return sample.gt_masks->masks[best];
  }
  if (sample.gt_bbox) return BinaryMask::from_bbox(sample.dims, *sample.gt_bbox);
  return std::nullopt;
}

CandidateSet score_candidates(const LabeledSample& sample, const MaskGenerator& maskgen, const EnsembleSpec& ens,
                              const OccamConfig& cfg) {
  cfg.validate();
  ens.validate();
  const bool alpha = std::holds_alternative<AlphaChannel>(cfg.application_mode);
  bool needs_pixels = false;
  for (const auto& m : ens.members) {
    const auto info = m.encoder->info();
    if (alpha && !info.accepts_alpha) {
      throw std::invalid_argument("encoder '" + info.name + "' does not accept alpha-channel inputs");
    }
    needs_pixels = needs_pixels || info.needs_pixels;
  }
  if (needs_pixels && !sample.image) throw std::invalid_argument("sample " + sample.id + " has no pixels loaded");
  if (sample.image && sample.image->dims() != sample.dims) {
    throw std::invalid_argument("sample " + sample.id + ": image size disagrees with recorded dims");
  }

  const MaskSet masks = maskgen.generate(sample);
  masks.check_dims(sample.dims);
  const auto kept = retained_mask_indices(masks, sample.dims, cfg.filter);

  CandidateSet out;
  std::vector<std::pair<int, const BinaryMask*>> candidates;
  const BinaryMask full(sample.dims.height, sample.dims.width, true);
  for (std::size_t k : kept) candidates.emplace_back(static_cast<int>(k), &masks.masks[k]);
  if (candidates.empty()) {
    if (cfg.fallback == Fallback::Error) {
      throw std::runtime_error("sample " + sample.id + ": no candidate masks left after filtering");
    }
    candidates.emplace_back(-1, &full);
    out.fallback_used = true;
  }

  std::optional<BinaryMask> gt_fg;
  if (cfg.scoring == ScoringStrategy::GroundTruthIoU) {
    gt_fg = foreground_gt_mask(sample);
    if (!gt_fg) throw std::invalid_argument("sample " + sample.id + " has no ground-truth foreground");
  }
  const auto& group_map = ens.members.front().head.group_map;

  for (const auto& [index, mask] : candidates) {
    std::optional<AppliedImage> applied;
    if (needs_pixels) applied = apply_mask(*sample.image, *mask, cfg.application_mode, index);
    ScoredMask sm;
    sm.mask_index = index;
    for (const auto& member : ens.members) {
      const EncodeQuery q{sample.id, index, applied ? &*applied : nullptr};
      sm.per_member_probs.push_back(classify(member.head, member.encoder->encode(q)));
    }
    ScoreAux aux;
    aux.label = sample.label;
    aux.class_to_label = group_map ? &*group_map : nullptr;
    aux.candidate_mask = mask;
    aux.gt_mask = gt_fg ? &*gt_fg : nullptr;
    sm.score = score_mask(cfg.scoring, sm.per_member_probs, aux);
    out.scored.push_back(std::move(sm));
  }
  return out;
}

OccamOutput finalize_selection(const LabeledSample& sample, CandidateSet candidates, const EnsembleSpec& ens) {
  const std::size_t pos = select_foreground_position(candidates.scored);
  const auto& chosen = candidates.scored[pos];
  ClassProbabilities probs = ens.final_member ? chosen.per_member_probs.at(*ens.final_member)
                                              : mean_of(chosen.per_member_probs);
  const int predicted = predict_label(ens.members.front().head, probs);
  return OccamOutput{sample.id,
                     std::move(probs),
                     predicted,
                     chosen.mask_index,
                     std::move(candidates.scored),
                     candidates.fallback_used};
}

OccamOutput occam_classify(const LabeledSample& sample, const MaskGenerator& maskgen, const EnsembleSpec& ens,
                           const OccamConfig& cfg) {
  return finalize_selection(sample, score_candidates(sample, maskgen, ens, cfg), ens);
}

BenchmarkRun run_benchmark(std::size_t n_samples, const SampleLoader& load, std::span<const std::string> sample_ids,
                           const MaskGenerator& maskgen, const EnsembleSpec& ens, const OccamConfig& cfg,
                           unsigned threads) {
  cfg.validate();
  ens.validate();
  std::vector<std::optional<OccamOutput>> outputs(n_samples);
  std::vector<std::optional<ResultRecord>> records(n_samples);
  std::vector<std::optional<std::string>> errors(n_samples);

  parallel_for(n_samples, threads, [&](std::size_t i) {
    try {
      const LabeledSample sample = load(i);
      auto out = occam_classify(sample, maskgen, ens, cfg);
      records[i] = ResultRecord{sample.id, out.predicted, sample.label, sample.group};
      outputs[i] = std::move(out);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  BenchmarkRun run;
  run.n_requested = n_samples;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (outputs[i]) {
      run.log.push_back(std::move(*outputs[i]));
      run.results.records.push_back(std::move(*records[i]));
    } else {
      const std::string id = i < sample_ids.size() ? sample_ids[i] : "#" + std::to_string(i);
      run.errors.emplace_back(id, errors[i].value_or("unknown error"));
    }
  }
  std::sort(run.log.begin(), run.log.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  std::sort(run.results.records.begin(), run.results.records.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  std::sort(run.errors.begin(), run.errors.end());
  return run;
}

BenchmarkRun run_benchmark(std::span<const LabeledSample> samples, const MaskGenerator& maskgen,
                           const EnsembleSpec& ens, const OccamConfig& cfg, unsigned threads) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const auto& s : samples) ids.push_back(s.id);
  return run_benchmark(
      samples.size(), [&](std::size_t i) { return samples[i]; }, ids, maskgen, ens, cfg, threads);
}

void write_audit_log(std::ostream& os, std::span<const OccamOutput> log, std::span<const ResultRecord> records) {
  if (log.size() != records.size()) throw std::invalid_argument("audit log and result records differ in length");
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& o = log[i];
    const auto& r = records[i];
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& s : o.all_scored) scores.push_back({{"mask", s.mask_index}, {"score", s.score}});
    nlohmann::json j = {{"id", o.sample_id},     {"scores", scores},       {"selected", o.selected_mask_index},
                        {"fallback", o.fallback_used}, {"predicted", o.predicted}, {"label", r.truth}};
    j["group"] = r.group ? nlohmann::json(*r.group) : nlohmann::json(nullptr);
    os << j.dump() << '\n';
  }
}

}  // namespace occam
