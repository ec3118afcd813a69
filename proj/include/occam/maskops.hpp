#pragma once

// Candidate-mask filtering and the two mask application operators.

#include <cstddef>
#include <variant>
#include <vector>

#include "occam/core.hpp"

namespace occam {

enum class Connectivity { Four, Eight };

struct FilterConfig {
  double min_area_fraction = 0.001;
  int max_components = 30;
  int keypoint_threshold = 6;
  static constexpr int keypoint_total = 8;
  Connectivity connectivity = Connectivity::Eight;

  void validate() const;
};

struct GrayBgCrop {
  int target_height = 224;
  int target_width = 224;
  float gray = 0.5f;
};

struct AlphaChannel {};

using ApplicationMode = std::variant<GrayBgCrop, AlphaChannel>;

void validate(const ApplicationMode& mode);
const char* mode_name(const ApplicationMode& mode);

struct AppliedImage {
  ImageTensor image;
  // -1 for the whole-image fallback.
  int source_mask_index = -1;
};

// Number of connected components of set pixels; 0 for an empty mask.
int connected_components(const BinaryMask& mask, Connectivity conn = Connectivity::Eight);

// The 4 corners followed by the 4 side centers, as (row, col).
std::vector<std::pair<int, int>> key_points(ImageDims dims);
int covered_key_points(const BinaryMask& mask);

// Indices (into `masks`) of the masks that pass every filtering rule, in order.
std::vector<std::size_t> retained_mask_indices(const MaskSet& masks, ImageDims dims, const FilterConfig& cfg);
MaskSet filter_masks(const MaskSet& masks, ImageDims dims, const FilterConfig& cfg);

// Intermediate state of the gray-background crop before resizing.
struct CropSquare {
  BBox rect;        // tight bounding rectangle of the mask
  int row0 = 0;     // top-left of the square in image coordinates (may be negative)
  int col0 = 0;
  int side = 0;
  ImageTensor square;  // side x side, gray outside the mask and outside the image
};

CropSquare gray_bg_square(const ImageTensor& image, const BinaryMask& mask, float gray);

// Bilinear resampling with half-pixel centers and edge clamping.
ImageTensor resize_bilinear(const ImageTensor& src, int height, int width);

AppliedImage apply_gray_bg_crop(const ImageTensor& image, const BinaryMask& mask, const GrayBgCrop& mode,
                                int mask_index = -1);
AppliedImage apply_alpha(const ImageTensor& image, const BinaryMask& mask, int mask_index = -1);
AppliedImage apply_mask(const ImageTensor& image, const BinaryMask& mask, const ApplicationMode& mode,
                        int mask_index = -1);

// Morphological dilation (radius > 0) or erosion (radius < 0) with a
// Euclidean disk. Pixels outside the image count as unset.
BinaryMask morph_disk(const BinaryMask& mask, int radius);

}  // namespace occam
