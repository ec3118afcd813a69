#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

#include "occam/interchange.hpp"
#include "occam/synthgen.hpp"
#include "tempdir.hpp"

using namespace occam;
using testutil::TempDir;

namespace {

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SynthDataset small_synth(int n = 6) {
  SynthSpec spec;
  spec.n_samples = n;
  spec.seed = 3;
  return generate(spec);
}

}  // namespace

TEST(EmbeddingTable, ByteLayout) {
  TempDir dir;
  EmbeddingTable t;
  t.keys = {"a", "a/0"};
  t.dim = 2;
  t.values = {1.0f, -2.0f, 0.5f, 0.0f};
  t.encoder = "demo";
  t.mode = "gray_crop";
  write_embedding_table(dir / "e.oce", t);
  const auto bytes = slurp(dir / "e.oce");
  ASSERT_EQ(bytes.size(), 4u + 4u + 4u + 16u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "OCE1");
  EXPECT_EQ(bytes[4], 2);  // count, little endian
  EXPECT_EQ(bytes[8], 2);  // dim
  // 1.0f = 0x3f800000
  EXPECT_EQ(bytes[12], 0x00);
  EXPECT_EQ(bytes[15], 0x3f);
  EXPECT_EQ(sidecar_path(dir / "e.oce"), dir / "e.json");

  const auto back = read_embedding_table(dir / "e.oce");
  EXPECT_EQ(back.keys, t.keys);
  EXPECT_EQ(back.values, t.values);
  EXPECT_EQ(back.mode, t.mode);
  EXPECT_EQ(back.encoder, "demo");
}

TEST(EmbeddingTable, RejectsCorruptFiles) {
  TempDir dir;
  EmbeddingTable t;
  t.keys = {"a"};
  t.dim = 1;
  t.values = {1.0f};
  write_embedding_table(dir / "e.oce", t);
  {
    std::ofstream os(dir / "e.oce", std::ios::binary | std::ios::app);
    os.put('x');
  }
  EXPECT_THROW(read_embedding_table(dir / "e.oce"), std::runtime_error);
  {
    std::ofstream os(dir / "e.oce", std::ios::binary | std::ios::trunc);
    os << "NOPE";
  }
  EXPECT_THROW(read_embedding_table(dir / "e.oce"), std::runtime_error);
}

TEST(FileEncoder, LooksUpKeys) {
  EmbeddingTable t;
  t.keys = {"s1", "s1/0"};
  t.dim = 2;
  t.values = {1, 0, 0, 1};
  const FileEncoder enc(t);
  EXPECT_FALSE(enc.info().needs_pixels);
  EXPECT_EQ(enc.encode({"s1", 0, nullptr}).values, (std::vector<double>{0, 1}));
  EXPECT_EQ(enc.encode({"s1", -1, nullptr}).values, (std::vector<double>{1, 0}));
  EXPECT_THROW(enc.encode({"s1", 3, nullptr}), std::runtime_error);
  t.keys = {"s1", "s1"};
  EXPECT_THROW(FileEncoder{t}, std::invalid_argument);
  EXPECT_EQ(embedding_key("x", 2), "x/2");
  EXPECT_EQ(embedding_key("x", -1), "x");
}

TEST(Png, RoundTrips) {
  TempDir dir;
  BinaryMask m(5, 7);
  m.set(1, 2);
  m.set(4, 6);
  write_mask_png(dir / "m.png", m);
  EXPECT_EQ(read_mask_png(dir / "m.png"), m);
  EXPECT_EQ(read_png_dims(dir / "m.png"), (ImageDims{5, 7}));

  InstanceSegmentation seg{3, 2, {0, 1, 300, 65535, 2, 0}};
  write_instance_png(dir / "s.png", seg);
  EXPECT_EQ(read_instance_png(dir / "s.png").labels, seg.labels);

  const auto data = small_synth(1);
  const auto& img = *data.samples[0].sample.image;
  write_image_png(dir / "i.png", img);
  EXPECT_EQ(read_image_png(dir / "i.png"), img);  // synthetic colours are multiples of 1/255
  EXPECT_THROW(read_mask_png(dir / "missing.png"), std::runtime_error);
}

TEST(Heads, JsonAndTextEmbeddings) {
  TempDir dir;
  ClassifierHead h;
  h.class_names = {"cat", "dog", "owl"};
  h.class_embeddings = {{1, 0}, {0, 1}, {0.5, 0.25}};
  h.temperature = 42;
  h.group_map = std::vector<int>{0, 0, 1};
  write_head_json(dir / "h.json", h);
  const auto back = read_head_json(dir / "h.json");
  EXPECT_EQ(back.class_names, h.class_names);
  EXPECT_EQ(back.class_embeddings, h.class_embeddings);
  EXPECT_EQ(back.group_map, h.group_map);
  EXPECT_EQ(back.temperature, 42);

  EmbeddingTable text;
  text.keys = {"A photo of dog", "cat"};
  text.dim = 2;
  text.values = {0, 1, 1, 0};
  ClassNames names;
  names.classes = {"cat", "dog"};
  const auto th = head_from_text_embeddings(text, names, 10);
  EXPECT_EQ(th.class_embeddings, (std::vector<std::vector<double>>{{1, 0}, {0, 1}}));
  names.classes.push_back("owl");
  EXPECT_THROW(head_from_text_embeddings(text, names), std::runtime_error);
}

TEST(ClassNamesFile, RoundTrip) {
  TempDir dir;
  ClassNames n;
  n.classes = {"a", "b", "c"};
  n.groups = {"land", "water"};
  n.group_of_class = std::vector<int>{0, 1, 1};
  write_class_names(dir / "c.json", n);
  EXPECT_EQ(read_class_names(dir / "c.json"), n);
  EXPECT_EQ(n.labels(), n.groups);
}

TEST(Manifest, SynthRoundTripIsExact) {
  TempDir dir;
  const auto data = small_synth();
  const auto path = write_dataset(data, dir.path());
  const auto ds = load_dataset_manifest(path);
  ASSERT_TRUE(ds.errors.empty());
  ASSERT_EQ(ds.entries.size(), data.samples.size());
  EXPECT_EQ(ds.class_names, data.class_names);
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& want = data.samples[i].sample;
    const auto got = ds.entries[i].to_sample(true);
    EXPECT_EQ(got.id, want.id);
    EXPECT_EQ(got.label, want.label);
    EXPECT_EQ(got.group, want.group);
    EXPECT_EQ(got.gt_bbox, want.gt_bbox);
    EXPECT_EQ(*got.image, *want.image);
    EXPECT_EQ(got.gt_masks->masks, want.gt_masks->masks);
    EXPECT_EQ(ds.entries[i].load_masks().masks, want.gt_masks->masks);
    EXPECT_EQ(ds.entries[i].load_gt_seg()->labels, data.samples[i].instances.labels);
  }
}

TEST(Manifest, ErrorsAreIsolated) {
  TempDir dir;
  const auto path = write_dataset(small_synth(), dir.path());
  const auto ids = read_manifest(path).samples;
  fs::remove(dir / ("masks/" + ids[1].id + "/0.png"));
  {
    std::ofstream os(dir / ("images/" + ids[2].id + ".png"), std::ios::binary | std::ios::app);
    os.put('\0');
  }
  const auto ds = load_dataset_manifest(path);
  EXPECT_EQ(ds.entries.size(), ids.size() - 2);
  ASSERT_EQ(ds.errors.size(), 2u);
  EXPECT_EQ(ds.errors[0].sample_id, ids[1].id);
  EXPECT_EQ(ds.errors[1].sample_id, ids[2].id);
  EXPECT_NE(ds.errors[1].message.find("checksum"), std::string::npos);

  LoadOptions strict;
  strict.fail_fast = true;
  EXPECT_THROW(load_dataset_manifest(path, strict), std::runtime_error);
}

TEST(Manifest, EmptyWarnsAndDataRoot) {
  TempDir dir;
  write_manifest(dir / "m.json", Manifest{});
  const auto ds = load_dataset_manifest(dir / "m.json");
  EXPECT_TRUE(ds.entries.empty());
  EXPECT_EQ(ds.warnings.size(), 1u);

  EXPECT_EQ(resolve_data_root(dir / "m.json", fs::path("/x")), fs::path("/x"));
  ::setenv("OCCAM_DATA_ROOT", "/from/env", 1);
  EXPECT_EQ(resolve_data_root(dir / "m.json", std::nullopt), fs::path("/from/env"));
  ::unsetenv("OCCAM_DATA_ROOT");
  EXPECT_EQ(resolve_data_root(dir / "m.json", std::nullopt), dir.path());
}

TEST(Manifest, DataRootRedirectsRelativePaths) {
  TempDir dir;
  write_dataset(small_synth(2), dir / "data");
  fs::create_directories(dir / "elsewhere");
  fs::copy_file(dir / "data/manifest.json", dir / "elsewhere/manifest.json");
  EXPECT_EQ(load_dataset_manifest(dir / "elsewhere/manifest.json").errors.size(), 2u);
  LoadOptions opts;
  opts.data_root = dir / "data";
  const auto ds = load_dataset_manifest(dir / "elsewhere/manifest.json", opts);
  EXPECT_TRUE(ds.errors.empty());
  EXPECT_EQ(ds.entries.size(), 2u);
}

TEST(Masks, FromInstancesOrder) {
  InstanceSegmentation seg{1, 4, {0, 3, 1, 1}};
  const auto set = masks_from_instances(seg);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_TRUE(set.masks[0].at(0, 2));  // id 1
  EXPECT_TRUE(set.masks[1].at(0, 1));  // id 3
  EXPECT_TRUE(set.masks[2].at(0, 0));  // background
}
