#include "occam/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "occam/backend.hpp"
#include "occam/parallel.hpp"
#include "occam/random.hpp"

namespace occam {

namespace {

constexpr double kBinWidth = 45.0;
constexpr std::array<const char*, 8> kHueNames = {"orange", "yellow", "green", "teal",
                                                  "azure",  "blue",   "violet", "rose"};

float quantize(double v) { return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f; }

std::array<float, 3> hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {quantize(r + m), quantize(g + m), quantize(b + m)};
}

std::array<float, 3> draw_colour(SplitMix64& rng, double hue, double jitter) {
  const double h = hue + rng.uniform(-jitter, jitter);
  const double s = rng.uniform(0.7, 1.0);
  const double v = rng.uniform(0.7, 1.0);
  return hsv_to_rgb(h, s, v);
}

void paint(std::vector<float>& data, ImageDims d, const BinaryMask& m, const std::array<float, 3>& rgb) {
  const std::size_t plane = d.pixels();
  const auto bits = m.bits();
  for (std::size_t i = 0; i < plane; ++i) {
    if (!bits[i]) continue;
    for (std::size_t c = 0; c < 3; ++c) data[c * plane + i] = rgb[c];
  }
}

bool overlaps(const BinaryMask& a, const BinaryMask& b) {
  const auto x = a.bits();
  const auto y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] && y[i]) return true;
  return false;
}

std::string sample_id(const SynthSpec& spec, int i) {
  std::ostringstream os;
  os << spec.id_prefix << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

SynthSample generate_one(const SynthSpec& spec, const std::vector<ClassPalette>& palettes, int i) {
  SplitMix64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
  const ImageDims dims{spec.height, spec.width};
  const int k = spec.n_classes;

  SynthSample out;
  const int label = i % k;
  const bool matched = rng.bernoulli(spec.rho);
  const int other = (label + 1 + rng.uniform_int(0, std::max(0, k - 2))) % k;
  out.background_class = matched ? label : other;

  const auto bg_rgb = draw_colour(rng, palettes[static_cast<std::size_t>(out.background_class)].background_hue,
                                  spec.hue_jitter);
  const auto fg_rgb = draw_colour(rng, palettes[static_cast<std::size_t>(label)].foreground_hue, spec.hue_jitter);

  out.shape = static_cast<ShapeKind>(rng.uniform_int(0, 2));
  int h = rng.uniform_int(spec.object_min, spec.object_max);
  int w = rng.uniform_int(spec.object_min, spec.object_max);
  if (out.shape == ShapeKind::Circle) w = h;
  const int r0 = rng.uniform_int(0, spec.height - h);
  const int c0 = rng.uniform_int(0, spec.width - w);
  const BinaryMask fg = render_shape(out.shape, dims, r0, c0, h, w);

  std::vector<BinaryMask> distractors;
  std::vector<float> distractor_grey;
  const int n_distractors = rng.uniform_int(spec.distractors_min, spec.distractors_max);
  for (int d = 0; d < n_distractors; ++d) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const auto kind = static_cast<ShapeKind>(rng.uniform_int(0, 2));
      const int dh = rng.uniform_int(spec.distractor_min_size, spec.distractor_max_size);
      const int dw = kind == ShapeKind::Circle ? dh : rng.uniform_int(spec.distractor_min_size, spec.distractor_max_size);
      const int dr = rng.uniform_int(0, spec.height - dh);
      const int dc = rng.uniform_int(0, spec.width - dw);
      auto m = render_shape(kind, dims, dr, dc, dh, dw);
      if (overlaps(m, fg)) continue;
      if (std::any_of(distractors.begin(), distractors.end(), [&](const auto& o) { return overlaps(m, o); })) continue;
      distractors.push_back(std::move(m));
      distractor_grey.push_back(quantize(rng.uniform(0.1, 0.9)));
      break;
    }
  }

  std::vector<float> data(3 * dims.pixels());
  for (std::size_t c = 0; c < 3; ++c)
    std::fill(data.begin() + static_cast<std::ptrdiff_t>(c * dims.pixels()),
              data.begin() + static_cast<std::ptrdiff_t>((c + 1) * dims.pixels()), bg_rgb[c]);
  for (std::size_t d = 0; d < distractors.size(); ++d) {
    const float g = distractor_grey[d];
    paint(data, dims, distractors[d], {g, g, g});
  }
  paint(data, dims, fg, fg_rgb);

  out.instances = InstanceSegmentation{spec.height, spec.width, std::vector<std::int32_t>(dims.pixels(), 0)};
  BinaryMask background(spec.height, spec.width, true);
  auto stamp = [&](const BinaryMask& m, std::int32_t id) {
    const auto bits = m.bits();
    for (std::size_t p = 0; p < bits.size(); ++p) {
      if (!bits[p]) continue;
      out.instances.labels[p] = id;
      background.set(static_cast<int>(p) / spec.width, static_cast<int>(p) % spec.width, false);
    }
  };
  stamp(fg, 1);
  for (std::size_t d = 0; d < distractors.size(); ++d) stamp(distractors[d], static_cast<std::int32_t>(d + 2));

  auto& s = out.sample;
  s.id = sample_id(spec, i);
  s.dims = dims;
  s.image = ImageTensor(3, spec.height, spec.width, std::move(data));
  s.label = label;
  s.group = synth_group(label, out.background_class, k);
  s.gt_bbox = fg.bounding_box();
  MaskSet gt;
  gt.source = MaskSource::GroundTruth;
  gt.masks.push_back(fg);
  for (auto& m : distractors) gt.masks.push_back(std::move(m));
  if (!background.none()) gt.masks.push_back(std::move(background));
  s.gt_masks = std::move(gt);
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_samples < 0) throw std::invalid_argument("n_samples must be non-negative");
  if (height < 16 || width < 16) throw std::invalid_argument("synthetic images must be at least 16x16");
  if (n_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (palettes.empty() && n_classes > 4) {
    throw std::invalid_argument("default palettes support at most 4 classes; pass explicit palettes");
  }
  if (!palettes.empty() && palettes.size() != static_cast<std::size_t>(n_classes)) {
    throw std::invalid_argument("need one palette per class");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  if (object_min < 1 || object_min > object_max) throw std::invalid_argument("invalid object size range");
  if (object_max > std::min(height, width)) throw std::invalid_argument("foreground shape larger than the image");
  if (distractors_min < 0 || distractors_min > distractors_max) throw std::invalid_argument("invalid distractor count");
  if (distractor_min_size < 1 || distractor_min_size > distractor_max_size ||
      distractor_max_size > std::min(height, width)) {
    throw std::invalid_argument("invalid distractor size range");
  }
  if (hue_jitter < 0.0) throw std::invalid_argument("hue jitter must be non-negative");
}

std::vector<ClassPalette> SynthSpec::resolved_palettes() const {
  if (!palettes.empty()) return palettes;
  // Foreground and background of a class sit in adjacent hue bins; classes
  // are spread around the wheel.
  std::vector<ClassPalette> out;
  const int step = 8 / n_classes;
  for (int c = 0; c < n_classes; ++c) {
    const double fg_bin = c * step;
    out.push_back({(fg_bin + 0.5) * kBinWidth, (fg_bin + 1.5) * kBinWidth});
  }
  return out;
}

int synth_group(int label, int background_class, int n_classes) { return label * n_classes + background_class; }

std::vector<LabeledSample> SynthDataset::labeled() const {
  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.sample);
  return out;
}

BinaryMask render_shape(ShapeKind kind, ImageDims dims, int row0, int col0, int height, int width) {
  BinaryMask m(dims.height, dims.width);
  auto put = [&](int r, int c) {
    if (r >= 0 && r < dims.height && c >= 0 && c < dims.width) m.set(r, c);
  };
  switch (kind) {
    case ShapeKind::Rectangle:
      for (int r = row0; r < row0 + height; ++r)
        for (int c = col0; c < col0 + width; ++c) put(r, c);
      break;
    case ShapeKind::Circle: {
      const double cy = row0 + (height - 1) / 2.0;
      const double cx = col0 + (width - 1) / 2.0;
      const double rad = std::min(height, width) / 2.0;
      for (int r = row0; r < row0 + height; ++r)
        for (int c = col0; c < col0 + width; ++c)
          if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= rad * rad) put(r, c);
      break;
    }
    case ShapeKind::Triangle: {
      // Apex at the top centre, base along the bottom row.
      const double cx = col0 + (width - 1) / 2.0;
      for (int r = row0; r < row0 + height; ++r) {
        const double t = height > 1 ? static_cast<double>(r - row0) / (height - 1) : 1.0;
        const double half = t * width / 2.0;
        for (int c = col0; c < col0 + width; ++c)
          if (std::abs(c - cx) <= half + 0.5) put(r, c);
      }
      break;
    }
  }
  return m;
}

SynthDataset generate(const SynthSpec& spec, unsigned threads) {
  spec.validate();
  const auto palettes = spec.resolved_palettes();
  std::vector<std::optional<SynthSample>> slots(static_cast<std::size_t>(spec.n_samples));
  parallel_for(slots.size(), threads, [&](std::size_t i) { slots[i] = generate_one(spec, palettes, static_cast<int>(i)); });

  SynthDataset out;
  out.samples.reserve(slots.size());
  for (auto& s : slots) out.samples.push_back(std::move(*s));
  for (const auto& p : palettes) {
    const int bin = static_cast<int>(std::fmod(p.foreground_hue + 360.0, 360.0) / kBinWidth) % 8;
    out.class_names.classes.push_back(std::string(kHueNames[static_cast<std::size_t>(bin)]) + " shape");
  }
  return out;
}

std::pair<SynthDataset, SynthDataset> counter_split(const SynthSpec& spec, unsigned threads) {
  SynthSpec common = spec;
  common.rho = 1.0;
  common.seed = mix_seed(spec.seed, std::string_view("common"));
  common.id_prefix = spec.id_prefix + "common_";
  SynthSpec counter = spec;
  counter.rho = 0.0;
  counter.seed = mix_seed(spec.seed, std::string_view("counter"));
  counter.id_prefix = spec.id_prefix + "counter_";
  return {generate(common, threads), generate(counter, threads)};
}

std::filesystem::path write_dataset(const SynthDataset& data, const std::filesystem::path& dir,
                                    const WriteOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "gt");
  write_class_names(dir / "classes.json", data.class_names);

  const NoisyMaskGenerator noisy(options.mask_noise_radius, options.noise_seed);
  Manifest manifest;
  for (const auto& s : data.samples) {
    const auto& ls = s.sample;
    const std::string image_rel = "images/" + ls.id + ".png";
    const std::string masks_rel = "masks/" + ls.id;
    const std::string gt_rel = "gt/" + ls.id + ".png";
    write_image_png(dir / image_rel, *ls.image);
    fs::create_directories(dir / masks_rel);
    const MaskSet masks = options.mask_noise_radius > 0 ? noisy.generate(ls) : *ls.gt_masks;
    for (std::size_t k = 0; k < masks.size(); ++k) {
      write_mask_png(dir / masks_rel / (std::to_string(k) + ".png"), masks.masks[k]);
    }
    write_instance_png(dir / gt_rel, s.instances);

    ManifestSample m;
    m.id = ls.id;
    m.image = image_rel;
    m.masks_dir = masks_rel;
    m.gt_seg = gt_rel;
    m.gt_bbox = ls.gt_bbox;
    m.label = ls.label;
    m.group = ls.group;
    m.class_names_ref = "classes.json";
    m.image_crc32 = file_crc32(dir / image_rel);
    manifest.samples.push_back(std::move(m));
  }
  const fs::path path = dir / "manifest.json";
  write_manifest(path, manifest);
  return path;
}

}  // namespace occam
