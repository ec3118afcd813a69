#include "occam/interchange.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace occam {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> kOceMagic = {'O', 'C', 'E', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw std::runtime_error("truncated embedding table");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

cv::Mat read_png_raw(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("missing file " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw std::runtime_error("cannot decode PNG " + path.string());
  return m;
}

void write_png_raw(const fs::path& path, const cv::Mat& m) {
  if (!cv::imwrite(path.string(), m)) throw std::runtime_error("cannot write PNG " + path.string());
}

}  // namespace

fs::path sidecar_path(const fs::path& table) {
  fs::path p = table;
  p.replace_extension(".json");
  return p;
}

void write_embedding_table(const fs::path& path, const EmbeddingTable& table) {
  if (table.values.size() != table.keys.size() * table.dim) {
    throw std::invalid_argument("embedding table value count does not match keys*dim");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kOceMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(table.keys.size()));
  put_u32(out, static_cast<std::uint32_t>(table.dim));
  for (float v : table.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw std::runtime_error("short write to " + path.string());

  json side = {{"format", "OCE1"}, {"keys", table.keys}, {"dim", table.dim}, {"encoder", table.encoder},
               {"accepts_alpha", table.accepts_alpha}};
  if (table.mode) side["mode"] = *table.mode;
  write_text(sidecar_path(path), side.dump(2) + "\n");
}

EmbeddingTable read_embedding_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kOceMagic) {
    throw std::runtime_error(path.string() + ": not an OCE1 embedding table");
  }
  EmbeddingTable t;
  const std::uint32_t count = get_u32(in);
  t.dim = get_u32(in);
  t.values.resize(static_cast<std::size_t>(count) * t.dim);
  for (auto& v : t.values) {
    v = std::bit_cast<float>(get_u32(in));
    if (!std::isfinite(v)) throw std::runtime_error(path.string() + ": non-finite embedding value");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error(path.string() + ": trailing bytes");

  const json side = read_json(sidecar_path(path));
  t.keys = side.at("keys").get<std::vector<std::string>>();
  if (t.keys.size() != count) {
    throw std::runtime_error(path.string() + ": sidecar lists " + std::to_string(t.keys.size()) + " keys for " +
                             std::to_string(count) + " rows");
  }
  if (side.contains("dim") && side["dim"].get<std::size_t>() != t.dim) {
    throw std::runtime_error(path.string() + ": sidecar dim disagrees with table header");
  }
  t.encoder = side.value("encoder", path.stem().string());
  t.accepts_alpha = side.value("accepts_alpha", false);
  if (side.contains("mode")) t.mode = side["mode"].get<std::string>();
  return t;
}

std::string embedding_key(std::string_view sample_id, int mask_index) {
  if (mask_index < 0) return std::string(sample_id);
  return std::string(sample_id) + "/" + std::to_string(mask_index);
}

FileEncoder::FileEncoder(EmbeddingTable table) : table_(std::move(table)) {
  if (table_.dim == 0) throw std::invalid_argument("embedding table has zero dimension");
  for (std::size_t i = 0; i < table_.keys.size(); ++i) {
    if (!index_.emplace(table_.keys[i], i).second) {
      throw std::invalid_argument("duplicate embedding key '" + table_.keys[i] + "'");
    }
  }
}

std::shared_ptr<FileEncoder> FileEncoder::open(const fs::path& path) {
  return std::make_shared<FileEncoder>(read_embedding_table(path));
}

EncoderInfo FileEncoder::info() const { return {table_.encoder, table_.dim, table_.accepts_alpha, false}; }

Embedding FileEncoder::encode(const EncodeQuery& query) const {
  const auto key = embedding_key(query.sample_id, query.mask_index);
  const auto it = index_.find(key);
  if (it == index_.end()) throw std::runtime_error("no embedding for key '" + key + "' in " + table_.encoder);
  const auto row = table_.row(it->second);
  return Embedding(std::vector<double>(row.begin(), row.end()));
}

ImageDims read_png_dims(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file " + path.string());
  std::array<unsigned char, 24> head{};
  static constexpr std::array<unsigned char, 8> kSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (!in.read(reinterpret_cast<char*>(head.data()), head.size()) ||
      !std::equal(kSig.begin(), kSig.end(), head.begin()) || std::memcmp(head.data() + 12, "IHDR", 4) != 0) {
    throw std::runtime_error(path.string() + ": not a PNG file");
  }
  auto be = [&](int off) {
    return static_cast<int>((static_cast<std::uint32_t>(head[off]) << 24) | (head[off + 1] << 16) |
                            (head[off + 2] << 8) | head[off + 3]);
  };
  return {be(20), be(16)};
}

BinaryMask read_mask_png(const fs::path& path) {
  const cv::Mat m = read_png_raw(path);
  if (m.channels() != 1 || m.depth() != CV_8U) throw std::runtime_error(path.string() + ": mask must be 8-bit gray");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(m.rows) * m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const auto* row = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < m.cols; ++c) bits[static_cast<std::size_t>(r) * m.cols + c] = row[c] >= 128 ? 1 : 0;
  }
  return BinaryMask(m.rows, m.cols, std::move(bits));
}

void write_mask_png(const fs::path& path, const BinaryMask& mask) {
  cv::Mat m(mask.height(), mask.width(), CV_8UC1);
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) m.at<std::uint8_t>(r, c) = mask.at(r, c) ? 255 : 0;
  write_png_raw(path, m);
}

InstanceSegmentation read_instance_png(const fs::path& path) {
  const cv::Mat m = read_png_raw(path);
  if (m.channels() != 1) throw std::runtime_error(path.string() + ": instance map must be single-channel");
  InstanceSegmentation seg{m.rows, m.cols, {}};
  seg.labels.resize(static_cast<std::size_t>(m.rows) * m.cols);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      const std::int32_t v = m.depth() == CV_16U ? m.at<std::uint16_t>(r, c) : m.at<std::uint8_t>(r, c);
      seg.labels[static_cast<std::size_t>(r) * m.cols + c] = v;
    }
  }
  return seg;
}

void write_instance_png(const fs::path& path, const InstanceSegmentation& seg) {
  seg.validate();
  cv::Mat m(seg.height, seg.width, CV_16UC1);
  for (int r = 0; r < seg.height; ++r) {
    for (int c = 0; c < seg.width; ++c) {
      const auto v = seg.at(r, c);
      if (v > 65535) throw std::invalid_argument("instance id does not fit in 16 bits");
      m.at<std::uint16_t>(r, c) = static_cast<std::uint16_t>(v);
    }
  }
  write_png_raw(path, m);
}

ImageTensor read_image_png(const fs::path& path) {
  const cv::Mat m = read_png_raw(path);
  const double scale = m.depth() == CV_16U ? 65535.0 : 255.0;
  if (m.depth() != CV_8U && m.depth() != CV_16U) throw std::runtime_error(path.string() + ": unsupported bit depth");
  ImageTensor img(3, m.rows, m.cols);
  auto px = [&](int r, int c, int ch) -> double {
    if (m.depth() == CV_8U) return m.ptr<std::uint8_t>(r)[c * m.channels() + ch];
    return m.ptr<std::uint16_t>(r)[c * m.channels() + ch];
  };
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        // OpenCV stores colour as BGR(A).
        const int src = m.channels() == 1 ? 0 : 2 - ch;
        img.set(ch, r, c, static_cast<float>(px(r, c, src) / scale));
      }
    }
  }
  return img;
}

void write_image_png(const fs::path& path, const ImageTensor& image) {
  if (image.channels() != 3) throw std::invalid_argument("only RGB images are written");
  cv::Mat m(image.height(), image.width(), CV_8UC3);
  for (int r = 0; r < image.height(); ++r) {
    auto* row = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < image.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        row[c * 3 + (2 - ch)] = static_cast<std::uint8_t>(std::lround(image.at(ch, r, c) * 255.0f));
      }
    }
  }
  write_png_raw(path, m);
}

std::uint32_t file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto n = in.gcount();
    if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

ClassNames read_class_names(const fs::path& path) {
  const json j = read_json(path);
  ClassNames out;
  out.classes = j.at("classes").get<std::vector<std::string>>();
  if (j.contains("group_of_class")) {
    out.group_of_class = j["group_of_class"].get<std::vector<int>>();
    out.groups = j.at("groups").get<std::vector<std::string>>();
    if (out.group_of_class->size() != out.classes.size()) {
      throw std::runtime_error(path.string() + ": group_of_class must cover every class");
    }
    for (int g : *out.group_of_class) {
      if (g < 0 || static_cast<std::size_t>(g) >= out.groups.size()) {
        throw std::runtime_error(path.string() + ": group id out of range");
      }
    }
  }
  if (out.classes.size() < 2) throw std::runtime_error(path.string() + ": need at least 2 classes");
  return out;
}

void write_class_names(const fs::path& path, const ClassNames& names) {
  json j = {{"classes", names.classes}};
  if (names.group_of_class) {
    j["groups"] = names.groups;
    j["group_of_class"] = *names.group_of_class;
  }
  write_text(path, j.dump(2) + "\n");
}

ClassifierHead read_head_json(const fs::path& path) {
  const json j = read_json(path);
  ClassifierHead head;
  head.class_names = j.value("class_names", std::vector<std::string>{});
  head.class_embeddings = j.at("class_embeddings").get<std::vector<std::vector<double>>>();
  head.temperature = j.value("temperature", 100.0);
  if (j.contains("group_map")) head.group_map = j["group_map"].get<std::vector<int>>();
  head.validate();
  return head;
}

void write_head_json(const fs::path& path, const ClassifierHead& head) {
  json j = {{"class_names", head.class_names},
            {"class_embeddings", head.class_embeddings},
            {"temperature", head.temperature}};
  if (head.group_map) j["group_map"] = *head.group_map;
  write_text(path, j.dump(2) + "\n");
}

ClassifierHead head_from_text_embeddings(const EmbeddingTable& text, const ClassNames& names, double temperature) {
  std::unordered_map<std::string, std::size_t> rows;
  for (std::size_t i = 0; i < text.keys.size(); ++i) rows.emplace(text.keys[i], i);
  ClassifierHead head;
  head.class_names = names.classes;
  head.temperature = temperature;
  head.group_map = names.group_of_class;
  for (const auto& name : names.classes) {
    auto it = rows.find(name);
    if (it == rows.end()) it = rows.find(class_prompt(name));
    if (it == rows.end()) throw std::runtime_error("no text embedding for class '" + name + "'");
    const auto row = text.row(it->second);
    head.class_embeddings.emplace_back(row.begin(), row.end());
  }
  head.validate();
  return head;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  json samples = json::array();
  for (const auto& s : manifest.samples) {
    json j = {{"id", s.id},
              {"image", s.image},
              {"masks_dir", s.masks_dir},
              {"label", s.label},
              {"class_names_ref", s.class_names_ref}};
    if (s.gt_seg) j["gt_seg"] = *s.gt_seg;
    if (s.gt_bbox) j["gt_bbox"] = {s.gt_bbox->row0, s.gt_bbox->col0, s.gt_bbox->row1, s.gt_bbox->col1};
    if (s.group) j["group"] = *s.group;
    if (s.image_crc32) j["image_crc32"] = *s.image_crc32;
    samples.push_back(std::move(j));
  }
  write_text(path, json{{"version", manifest.version}, {"samples", samples}}.dump(2) + "\n");
}

namespace {

ManifestSample parse_sample(const json& j) {
  ManifestSample s;
  s.id = j.at("id").get<std::string>();
  s.image = j.at("image").get<std::string>();
  s.masks_dir = j.at("masks_dir").get<std::string>();
  s.label = j.at("label").get<int>();
  s.class_names_ref = j.at("class_names_ref").get<std::string>();
  if (j.contains("gt_seg") && !j["gt_seg"].is_null()) s.gt_seg = j["gt_seg"].get<std::string>();
  if (j.contains("gt_bbox") && !j["gt_bbox"].is_null()) {
    const auto b = j["gt_bbox"].get<std::vector<int>>();
    if (b.size() != 4) throw std::runtime_error("gt_bbox must have 4 entries");
    s.gt_bbox = BBox{b[0], b[1], b[2], b[3]};
  }
  if (j.contains("group") && !j["group"].is_null()) s.group = j["group"].get<int>();
  if (j.contains("image_crc32") && !j["image_crc32"].is_null()) s.image_crc32 = j["image_crc32"].get<std::uint32_t>();
  return s;
}

// Numeric stems 0..K-1 of the PNGs in `dir`.
std::size_t count_mask_files(const fs::path& dir) {
  std::set<long> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".png") continue;
    const auto stem = e.path().stem().string();
    char* end = nullptr;
    const long k = std::strtol(stem.c_str(), &end, 10);
    if (stem.empty() || *end != '\0' || k < 0) throw std::runtime_error("unexpected mask file " + e.path().string());
    ids.insert(k);
  }
  if (!ids.empty() && (*ids.begin() != 0 || *ids.rbegin() != static_cast<long>(ids.size()) - 1)) {
    throw std::runtime_error("mask files in " + dir.string() + " are not numbered 0..K-1");
  }
  return ids.size();
}

}  // namespace

Manifest read_manifest(const fs::path& path) {
  const json j = read_json(path);
  Manifest m;
  m.version = j.value("version", 1);
  if (m.version != 1) throw std::runtime_error(path.string() + ": unsupported manifest version");
  for (const auto& s : j.at("samples")) m.samples.push_back(parse_sample(s));
  return m;
}

fs::path resolve_data_root(const fs::path& manifest, const std::optional<fs::path>& explicit_root) {
  if (explicit_root) return *explicit_root;
  if (const char* env = std::getenv("OCCAM_DATA_ROOT"); env != nullptr && *env != '\0') return fs::path(env);
  return manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
}

MaskSet DatasetEntry::load_masks() const {
  MaskSet out;
  for (std::size_t k = 0; k < mask_count; ++k) {
    auto m = read_mask_png(masks_dir / (std::to_string(k) + ".png"));
    if (m.dims() != dims) throw std::runtime_error("mask " + std::to_string(k) + " of " + record.id + " has wrong size");
    out.masks.push_back(std::move(m));
  }
  return out;
}

std::optional<InstanceSegmentation> DatasetEntry::load_gt_seg() const {
  if (!gt_seg_path) return std::nullopt;
  return read_instance_png(*gt_seg_path);
}

LabeledSample DatasetEntry::to_sample(bool load_pixels) const {
  LabeledSample s;
  s.id = record.id;
  s.dims = dims;
  s.image_ref = image_path.string();
  s.label = record.label;
  s.group = record.group;
  s.gt_bbox = record.gt_bbox;
  if (load_pixels) s.image = read_image_png(image_path);
  if (auto seg = load_gt_seg()) {
    s.gt_masks = masks_from_instances(*seg);
  }
  return s;
}

LoadedDataset load_dataset_manifest(const fs::path& path, const LoadOptions& options) {
  LoadedDataset out;
  out.manifest_path = path;
  const Manifest manifest = read_manifest(path);
  const fs::path root = resolve_data_root(path, options.data_root);
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : root / p; };

  if (manifest.samples.empty()) out.warnings.push_back("manifest " + path.string() + " has no samples");

  std::map<fs::path, ClassNames> names_cache;
  std::optional<fs::path> first_names;
  std::set<std::string> seen;
  for (const auto& rec : manifest.samples) {
    try {
      if (!seen.insert(rec.id).second) throw std::runtime_error("duplicate sample id");
      DatasetEntry e;
      e.record = rec;
      e.image_path = resolve(rec.image);
      e.masks_dir = resolve(rec.masks_dir);
      if (rec.gt_seg) e.gt_seg_path = resolve(*rec.gt_seg);
      e.dims = read_png_dims(e.image_path);
      if (rec.image_crc32 && file_crc32(e.image_path) != *rec.image_crc32) {
        throw std::runtime_error("checksum mismatch for " + e.image_path.string());
      }
      if (!fs::is_directory(e.masks_dir)) throw std::runtime_error("missing masks directory " + e.masks_dir.string());
      e.mask_count = count_mask_files(e.masks_dir);
      for (std::size_t k = 0; k < e.mask_count; ++k) {
        if (read_png_dims(e.masks_dir / (std::to_string(k) + ".png")) != e.dims) {
          throw std::runtime_error("mask " + std::to_string(k) + " does not match the image size");
        }
      }
      if (e.gt_seg_path && read_png_dims(*e.gt_seg_path) != e.dims) {
        throw std::runtime_error("gt_seg does not match the image size");
      }
      if (rec.gt_bbox && !rec.gt_bbox->within(e.dims)) throw std::runtime_error("gt_bbox outside image bounds");

      const fs::path names_path = resolve(rec.class_names_ref);
      auto it = names_cache.find(names_path);
      if (it == names_cache.end()) it = names_cache.emplace(names_path, read_class_names(names_path)).first;
      if (!first_names) {
        first_names = names_path;
        out.class_names = it->second;
      } else if (!(it->second == out.class_names)) {
        throw std::runtime_error("class names differ from the rest of the dataset");
      }
      if (rec.label < 0 || static_cast<std::size_t>(rec.label) >= it->second.labels().size()) {
        throw std::runtime_error("label " + std::to_string(rec.label) + " out of range");
      }
      out.entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      if (options.fail_fast) throw std::runtime_error("sample " + rec.id + ": " + ex.what());
      out.errors.push_back({rec.id, ex.what()});
    }
  }
  return out;
}

MaskSet masks_from_instances(const InstanceSegmentation& seg) {
  MaskSet out;
  out.source = MaskSource::GroundTruth;
  for (auto id : seg.instance_ids()) out.masks.push_back(seg.instance_mask(id));
  auto bg = seg.instance_mask(0);
  if (!bg.none()) out.masks.push_back(std::move(bg));
  return out;
}

FileMaskGenerator::FileMaskGenerator(const LoadedDataset& dataset, MaskSource source) : source_(source) {
  for (const auto& e : dataset.entries) dirs_.emplace(e.record.id, e.masks_dir);
}

MaskSet FileMaskGenerator::generate(const LabeledSample& sample) const {
  const auto it = dirs_.find(sample.id);
  if (it == dirs_.end()) throw std::runtime_error("no masks directory for sample " + sample.id);
  MaskSet out;
  out.source = source_;
  const std::size_t n = count_mask_files(it->second);
  for (std::size_t k = 0; k < n; ++k) out.masks.push_back(read_mask_png(it->second / (std::to_string(k) + ".png")));
  out.check_dims(sample.dims);
  return out;
}

}  // namespace occam
