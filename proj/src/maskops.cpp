#include "occam/maskops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace occam {

void FilterConfig::validate() const {
  if (!(min_area_fraction > 0.0 && min_area_fraction < 1.0)) {
    throw std::invalid_argument("min_area_fraction must lie in (0,1)");
  }
  if (max_components < 1) throw std::invalid_argument("max_components must be >= 1");
  if (keypoint_threshold < 1 || keypoint_threshold > keypoint_total) {
    throw std::invalid_argument("keypoint_threshold must lie in [1,8]");
  }
}

void validate(const ApplicationMode& mode) {
  if (const auto* g = std::get_if<GrayBgCrop>(&mode)) {
    if (g->target_height < 1 || g->target_width < 1) throw std::invalid_argument("crop target must be >= 1x1");
    if (!(g->gray >= 0.0f && g->gray <= 1.0f)) throw std::invalid_argument("gray value outside [0,1]");
  }
}

const char* mode_name(const ApplicationMode& mode) {
  return std::holds_alternative<GrayBgCrop>(mode) ? "gray_crop" : "alpha";
}

namespace {

// Disjoint-set forest over provisional labels.
class UnionFind {
 public:
  int make() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<int> parent_;
};

}  // namespace

int connected_components(const BinaryMask& mask, Connectivity conn) {
  const int h = mask.height();
  const int w = mask.width();
  if (h == 0 || w == 0) return 0;
  std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
  UnionFind uf;
  auto lab = [&](int r, int c) -> int { return label[static_cast<std::size_t>(r) * w + c]; };

  // Single raster pass; only already-visited neighbours are consulted.
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      int current = -1;
      auto link = [&](int rr, int cc) {
        if (rr < 0 || cc < 0 || cc >= w) return;
        const int l = lab(rr, cc);
        if (l < 0) return;
        if (current < 0) current = l;
        else uf.unite(current, l);
      };
      link(r, c - 1);
      link(r - 1, c);
      if (conn == Connectivity::Eight) {
        link(r - 1, c - 1);
        link(r - 1, c + 1);
      }
      if (current < 0) current = uf.make();
      label[static_cast<std::size_t>(r) * w + c] = current;
    }
  }
  int roots = 0;
  for (std::size_t i = 0; i < uf.size(); ++i) {
    if (uf.find(static_cast<int>(i)) == static_cast<int>(i)) ++roots;
  }
  return roots;
}

std::vector<std::pair<int, int>> key_points(ImageDims d) {
  const int h = d.height - 1;
  const int w = d.width - 1;
  const int mr = d.height / 2;
  const int mc = d.width / 2;
  return {{0, 0}, {0, w}, {h, 0}, {h, w}, {0, mc}, {h, mc}, {mr, 0}, {mr, w}};
}

int covered_key_points(const BinaryMask& mask) {
  int n = 0;
  for (auto [r, c] : key_points(mask.dims())) n += mask.at(r, c) ? 1 : 0;
  return n;
}

std::vector<std::size_t> retained_mask_indices(const MaskSet& masks, ImageDims dims, const FilterConfig& cfg) {
  cfg.validate();
  masks.check_dims(dims);
  const double min_area = cfg.min_area_fraction * static_cast<double>(dims.pixels());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto& m = masks.masks[i];
    if (static_cast<double>(m.area()) < min_area) continue;
    if (covered_key_points(m) >= cfg.keypoint_threshold) continue;
    if (connected_components(m, cfg.connectivity) > cfg.max_components) continue;
    keep.push_back(i);
  }
  return keep;
}

MaskSet filter_masks(const MaskSet& masks, ImageDims dims, const FilterConfig& cfg) {
  MaskSet out;
  out.source = masks.source;
  for (std::size_t i : retained_mask_indices(masks, dims, cfg)) out.masks.push_back(masks.masks[i]);
  return out;
}

CropSquare gray_bg_square(const ImageTensor& image, const BinaryMask& mask, float gray) {
  if (image.channels() != 3) throw std::invalid_argument("gray-background crop needs a 3-channel image");
  if (image.dims() != mask.dims()) throw std::invalid_argument("mask and image dimensions differ");
  const auto rect = mask.bounding_box();
  if (!rect) throw std::invalid_argument("empty mask not applicable");

  CropSquare out;
  out.rect = *rect;
  const int h = rect->height();
  const int w = rect->width();
  out.side = std::max(h, w);
  // Odd padding puts the extra pixel at the bottom/right.
  out.row0 = rect->row0 - (out.side - h) / 2;
  out.col0 = rect->col0 - (out.side - w) / 2;
  out.square = ImageTensor(3, out.side, out.side, gray);
  for (int r = 0; r < out.side; ++r) {
    const int ir = out.row0 + r;
    if (ir < 0 || ir >= image.height()) continue;
    for (int c = 0; c < out.side; ++c) {
      const int ic = out.col0 + c;
      if (ic < 0 || ic >= image.width() || !mask.at(ir, ic)) continue;
      for (int ch = 0; ch < 3; ++ch) out.square.set(ch, r, c, image.at(ch, ir, ic));
    }
  }
  return out;
}

ImageTensor resize_bilinear(const ImageTensor& src, int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("resize target must be >= 1x1");
  if (src.height() == height && src.width() == width) return src;

  struct Tap {
    int i0, i1;
    double t;
  };
  auto taps = [](int dst, int len) {
    std::vector<Tap> out(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(len) / dst;
    for (int i = 0; i < dst; ++i) {
      double x = (i + 0.5) * scale - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(len - 1));
      const int i0 = static_cast<int>(std::floor(x));
      const int i1 = std::min(i0 + 1, len - 1);
      out[static_cast<std::size_t>(i)] = {i0, i1, x - i0};
    }
    return out;
  };
  const auto ty = taps(height, src.height());
  const auto tx = taps(width, src.width());

  std::vector<float> data(static_cast<std::size_t>(src.channels()) * height * width);
  std::size_t k = 0;
  for (int ch = 0; ch < src.channels(); ++ch) {
    for (int r = 0; r < height; ++r) {
      const auto& y = ty[static_cast<std::size_t>(r)];
      for (int c = 0; c < width; ++c) {
        const auto& x = tx[static_cast<std::size_t>(c)];
        const double top = src.at(ch, y.i0, x.i0) * (1.0 - x.t) + src.at(ch, y.i0, x.i1) * x.t;
        const double bot = src.at(ch, y.i1, x.i0) * (1.0 - x.t) + src.at(ch, y.i1, x.i1) * x.t;
        const double v = top * (1.0 - y.t) + bot * y.t;
        data[k++] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return ImageTensor(src.channels(), height, width, std::move(data));
}

AppliedImage apply_gray_bg_crop(const ImageTensor& image, const BinaryMask& mask, const GrayBgCrop& mode,
                                int mask_index) {
  validate(ApplicationMode{mode});
  auto sq = gray_bg_square(image, mask, mode.gray);
  return {resize_bilinear(sq.square, mode.target_height, mode.target_width), mask_index};
}

AppliedImage apply_alpha(const ImageTensor& image, const BinaryMask& mask, int mask_index) {
  if (image.channels() != 3) throw std::invalid_argument("alpha application needs a 3-channel image");
  if (image.dims() != mask.dims()) throw std::invalid_argument("mask and image dimensions differ");
  std::vector<float> data(image.data().begin(), image.data().end());
  data.reserve(data.size() + mask.bits().size());
  for (auto b : mask.bits()) data.push_back(b ? 1.0f : 0.0f);
  return {ImageTensor(4, image.height(), image.width(), std::move(data)), mask_index};
}

AppliedImage apply_mask(const ImageTensor& image, const BinaryMask& mask, const ApplicationMode& mode,
                        int mask_index) {
  if (const auto* g = std::get_if<GrayBgCrop>(&mode)) return apply_gray_bg_crop(image, mask, *g, mask_index);
  return apply_alpha(image, mask, mask_index);
}

BinaryMask morph_disk(const BinaryMask& mask, int radius) {
  if (radius == 0) return mask;
  const int rad = std::abs(radius);
  const bool dilate = radius > 0;
  std::vector<std::pair<int, int>> offsets;
  for (int dr = -rad; dr <= rad; ++dr)
    for (int dc = -rad; dc <= rad; ++dc)
      if (dr * dr + dc * dc <= rad * rad) offsets.emplace_back(dr, dc);

  const int h = mask.height();
  const int w = mask.width();
  BinaryMask out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bool v = !dilate;
      for (auto [dr, dc] : offsets) {
        const int rr = r + dr;
        const int cc = c + dc;
        const bool s = rr >= 0 && rr < h && cc >= 0 && cc < w && mask.at(rr, cc);
        if (dilate && s) {
          v = true;
          break;
        }
        if (!dilate && !s) {
          v = false;
          break;
        }
      }
      out.set(r, c, v);
    }
  }
  return out;
}

}  // namespace occam
