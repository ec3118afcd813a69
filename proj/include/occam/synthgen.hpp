#pragma once

// Procedural scenes with a planted spurious correlation: the label is the
// colour of one foreground shape, and the solid background takes the
// label's own palette with probability rho (another class's otherwise).
// Every pixel's ground truth is known exactly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "occam/core.hpp"
#include "occam/interchange.hpp"

namespace occam {

struct ClassPalette {
  double foreground_hue = 0.0;  // degrees
  double background_hue = 0.0;
};

struct SynthSpec {
  int n_samples = 200;
  int height = 64;
  int width = 64;
  int n_classes = 2;
  // Empty: derived from n_classes (up to 4 classes).
  std::vector<ClassPalette> palettes;
  double rho = 1.0;
  int object_min = 28;
  int object_max = 44;
  int distractors_min = 0;
  int distractors_max = 2;
  int distractor_min_size = 6;
  int distractor_max_size = 10;
  double hue_jitter = 15.0;
  std::uint64_t seed = 0;
  std::string id_prefix = "s";

  void validate() const;
  std::vector<ClassPalette> resolved_palettes() const;
};

enum class ShapeKind { Rectangle, Circle, Triangle };

struct SynthSample {
  LabeledSample sample;  // gt_masks = [foreground, distractors..., background]
  int background_class = 0;
  ShapeKind shape = ShapeKind::Rectangle;
  InstanceSegmentation instances;  // 1 = foreground, 2.. = distractors
};

struct SynthDataset {
  std::vector<SynthSample> samples;
  ClassNames class_names;

  std::vector<LabeledSample> labeled() const;
};

// Group id of a (class, background palette) pair.
int synth_group(int label, int background_class, int n_classes);

SynthDataset generate(const SynthSpec& spec, unsigned threads = 1);

// Common split at rho = 1, counter split at rho = 0, same class balance.
std::pair<SynthDataset, SynthDataset> counter_split(const SynthSpec& spec, unsigned threads = 1);

BinaryMask render_shape(ShapeKind kind, ImageDims dims, int row0, int col0, int height, int width);

struct WriteOptions {
  // Written candidate masks are the ground truth perturbed by up to this many
  // pixels; 0 writes the exact ground truth.
  int mask_noise_radius = 0;
  std::uint64_t noise_seed = 0;
};

// Writes images/, masks/<id>/<k>.png, gt/<id>.png, classes.json and
// manifest.json under `dir`; returns the manifest path.
std::filesystem::path write_dataset(const SynthDataset& data, const std::filesystem::path& dir,
                                    const WriteOptions& options = {});

}  // namespace occam
