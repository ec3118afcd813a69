#pragma once

// On-disk interchange formats and the file-backed backends built on them.
//
//   * Embedding tables ("OCE1"): magic "OCE1", u32 LE row count, u32 LE dim,
//     then count*dim float32 LE values, row-major. A sidecar JSON next to the
//     table (same stem, ".json") lists the row keys in order, plus optional
//     encoder metadata.
//   * Candidate masks: one 8-bit grayscale PNG per mask (0/255) named
//     <k>.png inside the sample's masks directory.
//   * Ground-truth instance segmentation: one 16-bit grayscale PNG of ids.
//   * Dataset manifest: JSON {version, samples:[{id, image, masks_dir,
//     gt_seg?, gt_bbox?, label, group?, class_names_ref, image_crc32?}]}.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "occam/backend.hpp"
#include "occam/core.hpp"
#include "occam/metrics.hpp"

namespace occam {

namespace fs = std::filesystem;

// ---- embedding tables -------------------------------------------------------

struct EmbeddingTable {
  std::vector<std::string> keys;
  std::size_t dim = 0;
  std::vector<float> values;  // keys.size() * dim
  std::string encoder;
  std::optional<std::string> mode;  // application mode the rows were computed under
  bool accepts_alpha = false;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
};

fs::path sidecar_path(const fs::path& table);
void write_embedding_table(const fs::path& path, const EmbeddingTable& table);
EmbeddingTable read_embedding_table(const fs::path& path);

// Row key of an applied mask; the whole-image row is keyed by the sample id.
std::string embedding_key(std::string_view sample_id, int mask_index);

// Looks embeddings up by key instead of running a model.
class FileEncoder final : public Encoder {
 public:
  explicit FileEncoder(EmbeddingTable table);
  static std::shared_ptr<FileEncoder> open(const fs::path& path);

  EncoderInfo info() const override;
  Embedding encode(const EncodeQuery& query) const override;
  const std::optional<std::string>& mode() const { return table_.mode; }

 private:
  EmbeddingTable table_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---- PNG --------------------------------------------------------------------

ImageDims read_png_dims(const fs::path& path);
BinaryMask read_mask_png(const fs::path& path);
void write_mask_png(const fs::path& path, const BinaryMask& mask);
InstanceSegmentation read_instance_png(const fs::path& path);
void write_instance_png(const fs::path& path, const InstanceSegmentation& seg);
// 8-bit RGB; values are stored as round(v*255).
ImageTensor read_image_png(const fs::path& path);
void write_image_png(const fs::path& path, const ImageTensor& image);

std::uint32_t file_crc32(const fs::path& path);

// ---- class names and heads --------------------------------------------------

struct ClassNames {
  std::vector<std::string> classes;
  // Coarse label names and the fine-grained class -> label map, when the
  // dataset labels are groups of classes.
  std::vector<std::string> groups;
  std::optional<std::vector<int>> group_of_class;

  const std::vector<std::string>& labels() const { return group_of_class ? groups : classes; }
  friend bool operator==(const ClassNames&, const ClassNames&) = default;
};

ClassNames read_class_names(const fs::path& path);
void write_class_names(const fs::path& path, const ClassNames& names);

ClassifierHead read_head_json(const fs::path& path);
void write_head_json(const fs::path& path, const ClassifierHead& head);
// Rows keyed by class name (or by its prompt); ordered by `names.classes`.
ClassifierHead head_from_text_embeddings(const EmbeddingTable& text, const ClassNames& names,
                                         double temperature = 100.0);

// ---- manifests --------------------------------------------------------------

struct ManifestSample {
  std::string id;
  std::string image;
  std::string masks_dir;
  std::optional<std::string> gt_seg;
  std::optional<BBox> gt_bbox;
  int label = 0;
  std::optional<int> group;
  std::string class_names_ref;
  std::optional<std::uint32_t> image_crc32;
};

struct Manifest {
  int version = 1;
  std::vector<ManifestSample> samples;
};

void write_manifest(const fs::path& path, const Manifest& manifest);
Manifest read_manifest(const fs::path& path);

struct SampleError {
  std::string sample_id;
  std::string message;
};

struct LoadOptions {
  // Base for relative paths; defaults to $OCCAM_DATA_ROOT, then the manifest's directory.
  std::optional<fs::path> data_root;
  bool fail_fast = false;
};

// A validated manifest row with absolute paths; pixels and masks are read on demand.
struct DatasetEntry {
  ManifestSample record;
  fs::path image_path;
  fs::path masks_dir;
  std::optional<fs::path> gt_seg_path;
  ImageDims dims;
  std::size_t mask_count = 0;

  MaskSet load_masks() const;
  std::optional<InstanceSegmentation> load_gt_seg() const;
  LabeledSample to_sample(bool load_pixels) const;
};

struct LoadedDataset {
  fs::path manifest_path;
  std::vector<DatasetEntry> entries;
  std::vector<SampleError> errors;
  std::vector<std::string> warnings;
  ClassNames class_names;
};

fs::path resolve_data_root(const fs::path& manifest, const std::optional<fs::path>& explicit_root);
LoadedDataset load_dataset_manifest(const fs::path& path, const LoadOptions& options = {});

// Ground-truth masks from an instance map: instances in ascending id order,
// then the background if it is non-empty.
MaskSet masks_from_instances(const InstanceSegmentation& seg);

// Reads each sample's candidate masks from its masks directory.
class FileMaskGenerator final : public MaskGenerator {
 public:
  explicit FileMaskGenerator(const LoadedDataset& dataset, MaskSource source = MaskSource::ExternalSegmenter);
  MaskGeneratorInfo info() const override { return {"file", source_}; }
  MaskSet generate(const LabeledSample& sample) const override;

 private:
  std::unordered_map<std::string, fs::path> dirs_;
  MaskSource source_;
};

}  // namespace occam
