#include "occam/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace occam {

namespace {

void check_image_shape(int channels, int height, int width) {
  if (channels != 3 && channels != 4) {
    throw std::invalid_argument("image must have 3 or 4 channels, got " + std::to_string(channels));
  }
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
}

bool in_unit_range(float v) { return v >= 0.0f && v <= 1.0f; }

}  // namespace

ImageTensor::ImageTensor(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  check_image_shape(channels, height, width);
  if (!in_unit_range(fill)) throw std::invalid_argument("pixel value outside [0,1]");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

ImageTensor::ImageTensor(int channels, int height, int width, std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  check_image_shape(channels, height, width);
  if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
    throw std::invalid_argument("image data length does not match channels*H*W");
  }
  if (!std::all_of(data_.begin(), data_.end(), in_unit_range)) {
    throw std::invalid_argument("pixel value outside [0,1]");
  }
}

void ImageTensor::set(int c, int r, int col, float v) {
  if (!in_unit_range(v)) throw std::invalid_argument("pixel value outside [0,1]");
  data_[index(c, r, col)] = v;
}

std::span<const float> ImageTensor::plane(int c) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  return std::span<const float>(data_).subspan(static_cast<std::size_t>(c) * n, n);
}

BinaryMask::BinaryMask(int height, int width, bool fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw std::invalid_argument("mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  if (height < 1 || width < 1) throw std::invalid_argument("mask dimensions must be positive");
  if (bits_.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("mask data length does not match H*W");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

BinaryMask BinaryMask::from_bbox(ImageDims dims, const BBox& box) {
  if (!box.within(dims)) throw std::invalid_argument("bounding box outside image bounds");
  BinaryMask m(dims.height, dims.width);
  for (int r = box.row0; r < box.row1; ++r)
    for (int c = box.col0; c < box.col1; ++c) m.set(r, c);
  return m;
}

std::size_t BinaryMask::area() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::optional<BBox> BinaryMask::bounding_box() const {
  BBox box{height_, width_, -1, -1};
  bool any = false;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (!at(r, c)) continue;
      any = true;
      box.row0 = std::min(box.row0, r);
      box.col0 = std::min(box.col0, c);
      box.row1 = std::max(box.row1, r + 1);
      box.col1 = std::max(box.col1, c + 1);
    }
  }
  if (!any) return std::nullopt;
  return box;
}

const char* to_string(MaskSource s) {
  switch (s) {
    case MaskSource::ExternalSegmenter: return "external-segmenter";
    case MaskSource::OclSlots: return "ocl-slots";
    case MaskSource::GroundTruth: return "ground-truth";
    case MaskSource::Synthetic: return "synthetic";
  }
  return "unknown";
}

void MaskSet::check_dims(ImageDims dims) const {
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].dims() != dims) {
      throw std::invalid_argument("mask " + std::to_string(i) + " is " + std::to_string(masks[i].height()) + "x" +
                                  std::to_string(masks[i].width()) + ", expected " + std::to_string(dims.height) +
                                  "x" + std::to_string(dims.width));
    }
  }
}

Embedding::Embedding(std::vector<double> v) : values(std::move(v)) {
  if (values.empty()) throw std::invalid_argument("embedding dimension must be >= 1");
  for (double x : values) {
    if (!std::isfinite(x)) throw std::invalid_argument("embedding contains a non-finite value");
  }
}

double Embedding::norm() const {
  return std::sqrt(std::inner_product(values.begin(), values.end(), values.begin(), 0.0));
}

ClassProbabilities ClassProbabilities::from_probs(std::vector<double> probs) {
  if (probs.size() < 2) throw std::invalid_argument("class probabilities need at least 2 classes");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < -kTolerance || p > 1.0 + kTolerance) {
      throw std::invalid_argument("probability outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    throw std::invalid_argument("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
  for (double& p : probs) p = std::clamp(p, 0.0, 1.0) / sum;
  ClassProbabilities out;
  out.probs_ = std::move(probs);
  return out;
}

ClassProbabilities ClassProbabilities::from_logits(std::span<const double> logits) { return softmax(logits); }

std::size_t ClassProbabilities::argmax() const { return occam::argmax(probs_); }

double entropy(const ClassProbabilities& p) {
  double h = 0.0;
  for (double v : p.probs()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

ClassProbabilities softmax(std::span<const double> logits) {
  if (logits.size() < 2) throw std::invalid_argument("softmax needs at least 2 logits");
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite logit");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  auto out = ClassProbabilities::from_probs(std::move(probs));
  out.logits_ = std::vector<double>(logits.begin(), logits.end());
  return out;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("iou: mask dimensions differ");
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto ba = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    inter += (ba[i] & bb[i]);
    uni += (ba[i] | bb[i]);
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace occam
