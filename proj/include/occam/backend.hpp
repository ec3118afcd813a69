#pragma once

// Model-facing abstractions: mask generators, image encoders and zero-shot
// classifier heads, together with the analytic toy encoder used for
// desk-scale runs. All implementations are read-only after construction and
// safe to query from several threads.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occam/core.hpp"
#include "occam/maskops.hpp"

namespace occam {

struct MaskGeneratorInfo {
  std::string name;
  MaskSource source = MaskSource::ExternalSegmenter;
};

class MaskGenerator {
 public:
  virtual ~MaskGenerator() = default;
  virtual MaskGeneratorInfo info() const = 0;
  // Candidate masks before filtering; dims must equal sample.dims.
  virtual MaskSet generate(const LabeledSample& sample) const = 0;
};

struct EncoderInfo {
  std::string name;
  std::size_t dim = 0;
  bool accepts_alpha = false;
  // False for encoders that look embeddings up by key and never read pixels.
  bool needs_pixels = true;
};

struct EncodeQuery {
  std::string_view sample_id;
  int mask_index = -1;  // -1: whole image
  const AppliedImage* applied = nullptr;
};

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual EncoderInfo info() const = 0;
  virtual Embedding encode(const EncodeQuery& query) const = 0;
};

// Zero-shot head: logits are temperature-scaled cosines against per-class
// text embeddings. An optional group map folds fine-grained classes into
// coarse labels.
struct ClassifierHead {
  std::vector<std::string> class_names;
  std::vector<std::vector<double>> class_embeddings;
  double temperature = 100.0;
  std::optional<std::vector<int>> group_map;

  std::size_t num_classes() const { return class_embeddings.size(); }
  std::size_t dim() const { return class_embeddings.empty() ? 0 : class_embeddings.front().size(); }
  std::size_t num_labels() const;
  void validate() const;
};

ClassProbabilities classify(const ClassifierHead& head, const Embedding& emb);

// Coarse group of the highest-scoring fine-grained class.
int group_predict(const ClassifierHead& head, std::span<const double> logits);
int group_predict(const ClassifierHead& head, const ClassProbabilities& probs);

// Prediction in label space: the group when the head has a group map,
// otherwise the argmax class.
int predict_label(const ClassifierHead& head, const ClassProbabilities& probs);

// The usual "A photo of X" zero-shot prompt.
std::string class_prompt(std::string_view class_name);

// Nearest-prototype head fitted on encoder features: each class row is the
// mean of its L2-normalized features minus the mean of all class means.
ClassifierHead fit_prototype_head(std::span<const Embedding> features, std::span<const int> labels,
                                  std::vector<std::string> class_names, double temperature = 100.0);

struct EnsembleMember {
  std::shared_ptr<const Encoder> encoder;
  ClassifierHead head;
};

struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  // Classify with this member only; the mean over members otherwise.
  std::optional<std::size_t> final_member;

  std::size_t size() const { return members.size(); }
  void validate() const;
};

// Deterministic 12-d features: mean RGB of the region (alpha > 0 for RGBA,
// the whole image otherwise), an 8-bin hue histogram as fractions of region
// pixels (achromatic pixels fall in no bin) and the region's area fraction.
class ToyEncoder final : public Encoder {
 public:
  static constexpr std::size_t kDim = 12;
  static constexpr int kHueBins = 8;

  EncoderInfo info() const override { return {"toy", kDim, true, true}; }
  Embedding encode(const EncodeQuery& query) const override;
};

Embedding toy_encode(const ImageTensor& image);

// Hue in degrees [0,360) and chroma (max - min) of an RGB triple.
struct HueChroma {
  double hue = 0.0;
  double chroma = 0.0;
};
HueChroma hue_chroma(double r, double g, double b);

// Uses the sample's own ground-truth masks as candidates.
class GroundTruthMaskGenerator final : public MaskGenerator {
 public:
  MaskGeneratorInfo info() const override { return {"gt", MaskSource::GroundTruth}; }
  MaskSet generate(const LabeledSample& sample) const override;
};

// Ground-truth masks each dilated or eroded by a per-mask radius drawn from
// [-max_radius, max_radius], seeded by (seed, sample id).
class NoisyMaskGenerator final : public MaskGenerator {
 public:
  NoisyMaskGenerator(int max_radius, std::uint64_t seed) : max_radius_(max_radius), seed_(seed) {}
  MaskGeneratorInfo info() const override { return {"noisy-gt", MaskSource::Synthetic}; }
  MaskSet generate(const LabeledSample& sample) const override;

 private:
  int max_radius_;
  std::uint64_t seed_;
};

// Always returns zero masks; with the whole-image fallback this is plain
// mask-free classification.
class NoMaskGenerator final : public MaskGenerator {
 public:
  MaskGeneratorInfo info() const override { return {"none", MaskSource::ExternalSegmenter}; }
  MaskSet generate(const LabeledSample&) const override { return {}; }
};

// Stable 64-bit hash used to derive per-sample seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view key);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace occam
