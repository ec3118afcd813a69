#pragma once

// Shared domain types: images, binary masks, embeddings and class
// probabilities, plus the small numeric helpers every stage relies on.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace occam {

struct ImageDims {
  int height = 0;
  int width = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

// Pixel tensor in [0,1], channel-major then row-major. 3 channels (RGB) or
// 4 channels (RGBA, alpha last).
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int height, int width, float fill = 0.0f);
  ImageTensor(int channels, int height, int width, std::vector<float> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  ImageDims dims() const { return {height_, width_}; }
  bool empty() const { return data_.empty(); }

  float at(int c, int r, int col) const { return data_[index(c, r, col)]; }
  // Values outside [0,1] are rejected.
  void set(int c, int r, int col, float v);

  std::span<const float> data() const { return data_; }
  std::span<const float> plane(int c) const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int c, int r, int col) const {
    return (static_cast<std::size_t>(c) * height_ + r) * width_ + col;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// Half-open rectangle [row0,row1) x [col0,col1).
struct BBox {
  int row0 = 0;
  int col0 = 0;
  int row1 = 0;
  int col1 = 0;

  int height() const { return row1 - row0; }
  int width() const { return col1 - col0; }
  bool empty() const { return row1 <= row0 || col1 <= col0; }
  bool within(ImageDims d) const {
    return row0 >= 0 && col0 >= 0 && row1 <= d.height && col1 <= d.width && !empty();
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool fill = false);
  BinaryMask(int height, int width, std::vector<std::uint8_t> bits);

  static BinaryMask from_bbox(ImageDims dims, const BBox& box);

  int height() const { return height_; }
  int width() const { return width_; }
  ImageDims dims() const { return {height_, width_}; }

  bool at(int r, int c) const { return bits_[static_cast<std::size_t>(r) * width_ + c] != 0; }
  void set(int r, int c, bool v = true) { bits_[static_cast<std::size_t>(r) * width_ + c] = v ? 1 : 0; }

  std::size_t area() const;
  bool none() const { return area() == 0; }
  // Tight bounding rectangle; nullopt for an empty mask.
  std::optional<BBox> bounding_box() const;

  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class MaskSource { ExternalSegmenter, OclSlots, GroundTruth, Synthetic };

const char* to_string(MaskSource s);

// Masks may overlap and need not cover the image.
struct MaskSet {
  std::vector<BinaryMask> masks;
  MaskSource source = MaskSource::ExternalSegmenter;

  std::size_t size() const { return masks.size(); }
  bool empty() const { return masks.empty(); }
  // Throws std::invalid_argument when any mask disagrees with `dims`.
  void check_dims(ImageDims dims) const;
};

struct Embedding {
  std::vector<double> values;

  Embedding() = default;
  explicit Embedding(std::vector<double> v);
  std::size_t dim() const { return values.size(); }
  double norm() const;
};

class ClassProbabilities;
ClassProbabilities softmax(std::span<const double> logits);

class ClassProbabilities {
 public:
  static constexpr double kTolerance = 1e-6;

  // Validates against kTolerance and renormalizes; throws on anything further off.
  static ClassProbabilities from_probs(std::vector<double> probs);
  static ClassProbabilities from_logits(std::span<const double> logits);

  std::size_t num_classes() const { return probs_.size(); }
  const std::vector<double>& probs() const { return probs_; }
  const std::optional<std::vector<double>>& logits() const { return logits_; }
  double operator[](std::size_t c) const { return probs_[c]; }
  std::size_t argmax() const;

 private:
  friend ClassProbabilities softmax(std::span<const double> logits);
  ClassProbabilities() = default;
  std::vector<double> probs_;
  std::optional<std::vector<double>> logits_;
};

struct LabeledSample {
  std::string id;
  ImageDims dims;
  // Pixels are optional: precomputed-embedding backends never touch them.
  std::optional<ImageTensor> image;
  std::string image_ref;
  int label = 0;
  std::optional<int> group;
  std::optional<MaskSet> gt_masks;
  std::optional<BBox> gt_bbox;
};

// Shannon entropy in nats with 0 ln 0 = 0.
double entropy(const ClassProbabilities& p);

ClassProbabilities softmax(std::span<const double> logits);

double iou(const BinaryMask& a, const BinaryMask& b);

// Index of the maximum; ties resolve to the lowest index. Throws on empty input.
std::size_t argmax(std::span<const double> values);

}  // namespace occam
