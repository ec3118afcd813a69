#include "occam/backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "occam/random.hpp"

namespace occam {

std::size_t ClassifierHead::num_labels() const {
  if (!group_map) return num_classes();
  return static_cast<std::size_t>(*std::max_element(group_map->begin(), group_map->end())) + 1;
}

void ClassifierHead::validate() const {
  if (class_embeddings.size() < 2) throw std::invalid_argument("classifier head needs at least 2 classes");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("classifier temperature must be positive");
  }
  const std::size_t d = class_embeddings.front().size();
  if (d == 0) throw std::invalid_argument("class embeddings must be non-empty");
  for (const auto& row : class_embeddings) {
    if (row.size() != d) throw std::invalid_argument("class embeddings differ in dimension");
    double n2 = 0.0;
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("class embedding has a non-finite value");
      n2 += v * v;
    }
    if (n2 <= 0.0) throw std::invalid_argument("class embedding row is zero and cannot be normalized");
  }
  if (!class_names.empty() && class_names.size() != class_embeddings.size()) {
    throw std::invalid_argument("class name count does not match class embeddings");
  }
  if (group_map) {
    if (group_map->size() != class_embeddings.size()) {
      throw std::invalid_argument("group map does not cover every class");
    }
    for (int g : *group_map)
      if (g < 0) throw std::invalid_argument("group ids must be non-negative");
  }
}

ClassProbabilities classify(const ClassifierHead& head, const Embedding& emb) {
  if (emb.dim() != head.dim()) {
    throw std::invalid_argument("embedding dimension " + std::to_string(emb.dim()) +
                                " does not match classifier dimension " + std::to_string(head.dim()));
  }
  const double en = emb.norm();
  std::vector<double> logits(head.num_classes(), 0.0);
  for (std::size_t c = 0; c < head.num_classes(); ++c) {
    const auto& row = head.class_embeddings[c];
    const double rn = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
    const double dot = std::inner_product(row.begin(), row.end(), emb.values.begin(), 0.0);
    const double cosine = en > 0.0 ? dot / (en * rn) : 0.0;
    logits[c] = head.temperature * cosine;
  }
  return softmax(logits);
}

int group_predict(const ClassifierHead& head, std::span<const double> logits) {
  if (!head.group_map) throw std::invalid_argument("group prediction needs a group map");
  if (logits.size() != head.group_map->size()) throw std::invalid_argument("logit count does not match group map");
  return (*head.group_map)[argmax(logits)];
}

int group_predict(const ClassifierHead& head, const ClassProbabilities& probs) {
  if (probs.logits()) return group_predict(head, std::span<const double>(*probs.logits()));
  return group_predict(head, std::span<const double>(probs.probs()));
}

int predict_label(const ClassifierHead& head, const ClassProbabilities& probs) {
  if (head.group_map) return group_predict(head, probs);
  return static_cast<int>(probs.argmax());
}

std::string class_prompt(std::string_view class_name) { return "A photo of " + std::string(class_name); }

ClassifierHead fit_prototype_head(std::span<const Embedding> features, std::span<const int> labels,
                                  std::vector<std::string> class_names, double temperature) {
  if (features.size() != labels.size()) throw std::invalid_argument("feature and label counts differ");
  if (features.empty()) throw std::invalid_argument("cannot fit a head without training features");
  const std::size_t k = class_names.size();
  if (k < 2) throw std::invalid_argument("need at least 2 classes");
  const std::size_t d = features.front().dim();

  std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw std::invalid_argument("training label out of range");
    if (features[i].dim() != d) throw std::invalid_argument("training features differ in dimension");
    const double n = features[i].norm();
    if (n <= 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) sums[static_cast<std::size_t>(y)][j] += features[i].values[j] / n;
    ++counts[static_cast<std::size_t>(y)];
  }
  std::vector<double> centre(d, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) throw std::invalid_argument("class '" + class_names[c] + "' has no training samples");
    for (std::size_t j = 0; j < d; ++j) {
      sums[c][j] /= static_cast<double>(counts[c]);
      centre[j] += sums[c][j] / static_cast<double>(k);
    }
  }
  ClassifierHead head;
  head.class_names = std::move(class_names);
  head.temperature = temperature;
  for (auto& row : sums) {
    for (std::size_t j = 0; j < d; ++j) row[j] -= centre[j];
  }
  head.class_embeddings = std::move(sums);
  head.validate();
  return head;
}

void EnsembleSpec::validate() const {
  if (members.empty()) throw std::invalid_argument("ensemble needs at least one member");
  const std::size_t k = members.front().head.num_classes();
  for (const auto& m : members) {
    if (!m.encoder) throw std::invalid_argument("ensemble member without an encoder");
    m.head.validate();
    if (m.head.num_classes() != k) throw std::invalid_argument("ensemble heads disagree on the class set");
    if (m.encoder->info().dim != m.head.dim()) {
      throw std::invalid_argument("encoder '" + m.encoder->info().name + "' dimension does not match its head");
    }
    if (m.head.group_map != members.front().head.group_map) {
      throw std::invalid_argument("ensemble heads disagree on the group map");
    }
  }
  if (final_member && *final_member >= members.size()) {
    throw std::invalid_argument("final classification member out of range");
  }
}

HueChroma hue_chroma(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double chroma = mx - mn;
  if (chroma <= 0.0) return {0.0, 0.0};
  double h = 0.0;
  if (mx == r) h = std::fmod((g - b) / chroma, 6.0);
  else if (mx == g) h = (b - r) / chroma + 2.0;
  else h = (r - g) / chroma + 4.0;
  h *= 60.0;
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return {h, chroma};
}

Embedding toy_encode(const ImageTensor& image) {
  if (image.channels() != 3 && image.channels() != 4) throw std::invalid_argument("toy encoder needs RGB or RGBA");
  constexpr double kMinChroma = 1e-6;
  const bool alpha = image.channels() == 4;
  const auto r = image.plane(0);
  const auto g = image.plane(1);
  const auto b = image.plane(2);
  std::span<const float> a;
  if (alpha) a = image.plane(3);

  std::vector<double> feat(ToyEncoder::kDim, 0.0);
  std::size_t region = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (alpha && !(a[i] > 0.0f)) continue;
    ++region;
    feat[0] += r[i];
    feat[1] += g[i];
    feat[2] += b[i];
    const auto hc = hue_chroma(r[i], g[i], b[i]);
    if (hc.chroma > kMinChroma) {
      const int bin = std::min(static_cast<int>(hc.hue / (360.0 / ToyEncoder::kHueBins)), ToyEncoder::kHueBins - 1);
      feat[3 + static_cast<std::size_t>(bin)] += 1.0;
    }
  }
  if (region > 0) {
    for (std::size_t j = 0; j < 3 + ToyEncoder::kHueBins; ++j) feat[j] /= static_cast<double>(region);
  }
  feat[ToyEncoder::kDim - 1] = static_cast<double>(region) / static_cast<double>(r.size());
  return Embedding(std::move(feat));
}

Embedding ToyEncoder::encode(const EncodeQuery& query) const {
  if (query.applied == nullptr) throw std::invalid_argument("toy encoder needs the applied image");
  return toy_encode(query.applied->image);
}

MaskSet GroundTruthMaskGenerator::generate(const LabeledSample& sample) const {
  if (!sample.gt_masks) throw std::invalid_argument("sample " + sample.id + " has no ground-truth masks");
  MaskSet out = *sample.gt_masks;
  out.source = MaskSource::GroundTruth;
  return out;
}

MaskSet NoisyMaskGenerator::generate(const LabeledSample& sample) const {
  if (!sample.gt_masks) throw std::invalid_argument("sample " + sample.id + " has no ground-truth masks");
  SplitMix64 rng(mix_seed(seed_, sample.id));
  MaskSet out;
  out.source = MaskSource::Synthetic;
  for (const auto& m : sample.gt_masks->masks) {
    const int radius = rng.uniform_int(-max_radius_, max_radius_);
    out.masks.push_back(morph_disk(m, radius));
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view key) {
  // FNV-1a over the key, then one SplitMix64 round with the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(seed ^ h).next();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 a(seed);
  return SplitMix64(a.next() ^ (index * 0x9e3779b97f4a7c15ULL)).next();
}

}  // namespace occam
