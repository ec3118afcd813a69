#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "occam/cli.hpp"
#include "occam/interchange.hpp"
#include "tempdir.hpp"

using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

int occam_cli(std::vector<std::string> args) { return occam::cli::run(args); }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json report(const fs::path& dir) { return nlohmann::json::parse(read_text(dir / "report.json")); }

double metric(const nlohmann::json& rep, const std::string& name,
              const std::map<std::string, std::string>& where = {}) {
  for (const auto& row : rep["rows"]) {
    if (row["metric"] != name) continue;
    bool match = true;
    for (const auto& [k, v] : where) match = match && row["config"][k] == v;
    if (match) return row["value"].get<double>();
  }
  ADD_FAILURE() << "no row " << name;
  return -1;
}

// train split, head and a counter split with noisy candidate masks
void toy_world(const TempDir& dir) {
  ASSERT_EQ(occam_cli({"synth", "--n", "60", "--seed", "1", "--out", (dir / "train").string()}), 0);
  ASSERT_EQ(occam_cli({"synth", "--n", "40", "--seed", "2", "--split", "counter", "--mask-noise", "1", "--out",
                       (dir / "test").string()}),
            0);
  ASSERT_EQ(occam_cli({"fit-head", "--manifest", (dir / "train/manifest.json").string(), "--out",
                       (dir / "head").string(), "--target-size", "64"}),
            0);
}

}  // namespace

TEST(Cli, RejectsUnknownFlagsAndBadOut) {
  TempDir dir;
  EXPECT_NE(occam_cli({"synth", "--bogus", "--out", (dir / "x").string()}), 0);
  EXPECT_NE(occam_cli({"synth", "--out", (dir / "no/such/x").string()}), 0);
  EXPECT_NE(occam_cli({}), 0);
  EXPECT_NE(occam_cli({"discover-eval", "--out", (dir / "y").string()}), 0);  // --manifest missing
}

TEST(Cli, DiscoverEval) {
  TempDir dir;
  ASSERT_EQ(occam_cli({"synth", "--n", "12", "--out", (dir / "d").string()}), 0);
  const auto manifest = (dir / "d/manifest.json").string();
  ASSERT_EQ(occam_cli({"discover-eval", "--manifest", manifest, "--pred-source", "gt", "--out", (dir / "r1").string()}),
            0);
  EXPECT_DOUBLE_EQ(metric(report(dir / "r1"), "fg_ari"), 1.0);
  EXPECT_DOUBLE_EQ(metric(report(dir / "r1"), "mbo"), 1.0);

  // file masks are the exact gt here; shuffling them changes nothing
  ASSERT_EQ(occam_cli({"discover-eval", "--manifest", manifest, "--out", (dir / "r2").string()}), 0);
  ASSERT_EQ(occam_cli({"discover-eval", "--manifest", manifest, "--shuffle-pred", "--seed", "4", "--out",
                       (dir / "r3").string()}),
            0);
  EXPECT_EQ(read_text(dir / "r2/report.json"), read_text(dir / "r3/report.json"));
  EXPECT_DOUBLE_EQ(metric(report(dir / "r2"), "fg_ari"), 1.0);
}

TEST(Cli, DiscoverEvalNeedsGroundTruth) {
  TempDir dir;
  ASSERT_EQ(occam_cli({"synth", "--n", "3", "--out", (dir / "d").string()}), 0);
  auto m = occam::read_manifest(dir / "d/manifest.json");
  m.samples[1].gt_seg.reset();
  occam::write_manifest(dir / "d/manifest.json", m);
  EXPECT_EQ(occam_cli({"discover-eval", "--manifest", (dir / "d/manifest.json").string(), "--out",
                       (dir / "r").string()}),
            1);
  const auto rep = report(dir / "r");
  ASSERT_EQ(rep["errors"].size(), 1u);
  EXPECT_EQ(rep["errors"][0]["id"], m.samples[1].id);
  EXPECT_EQ(rep["rows"][0]["n_samples"], 2);
}

TEST(Cli, FgEval) {
  TempDir dir;
  toy_world(dir);
  const auto manifest = (dir / "test/counter/manifest.json").string();
  const auto head = (dir / "head/head.json").string();
  ASSERT_EQ(occam_cli({"fg-eval", "--manifest", manifest, "--head", head, "--mask-model", "gt", "--target-size", "64",
                       "--out", (dir / "fg").string()}),
            0);
  const auto rep = report(dir / "fg");
  EXPECT_DOUBLE_EQ(metric(rep, "auroc", {{"strategy", "ground_truth_iou"}}), 1.0);
  EXPECT_GE(metric(rep, "auroc", {{"strategy", "class_aided"}}), metric(rep, "auroc", {{"strategy", "single_entropy"}}));
  EXPECT_TRUE(fs::exists(dir / "fg/roc_class_aided.csv"));
  EXPECT_EQ(read_text(dir / "fg/roc_max_prob.csv").rfind("fpr,tpr\n", 0), 0u);
}

TEST(Cli, ClassifyEvalGrid) {
  TempDir dir;
  toy_world(dir);
  const auto manifest = (dir / "test/counter/manifest.json").string();
  const auto head = (dir / "head/head.json").string();
  ASSERT_EQ(occam_cli({"classify-eval", "--manifest", manifest, "--head", head, "--mask-model", "none", "--mask-model",
                       "gt", "--mask-model", "file", "--strategy", "class_aided", "--strategy", "ensemble_entropy",
                       "--target-size", "64", "--audit", "--out", (dir / "c").string()}),
            0);
  const auto rep = report(dir / "c");
  const double base = metric(rep, "accuracy", {{"mask_model", "none"}});
  EXPECT_GE(metric(rep, "accuracy", {{"mask_model", "gt"}, {"strategy", "class_aided"}}), base);
  EXPECT_LE(metric(rep, "worst_group_accuracy", {{"mask_model", "file"}, {"strategy", "class_aided"}}),
            metric(rep, "accuracy", {{"mask_model", "file"}, {"strategy", "class_aided"}}));
  // none + one strategy-independent row, then 2 mask models x 2 strategies, each with accuracy and wga
  EXPECT_EQ(rep["rows"].size(), 10u);
  EXPECT_TRUE(fs::exists(dir / "c/audit/gt_gray_crop_class_aided.jsonl"));

  ASSERT_EQ(occam_cli({"classify-eval", "--manifest", manifest, "--head", head, "--mask-model", "none", "--format",
                       "csv", "--target-size", "64", "--out", (dir / "csv").string()}),
            0);
  const auto csv = read_text(dir / "csv/report.csv");
  EXPECT_EQ(csv.rfind("mask_model,mode,strategy,metric,group,value,n_samples\n", 0), 0u);
}

TEST(Cli, SampleErrorsGiveNonzeroExit) {
  TempDir dir;
  toy_world(dir);
  const auto m = occam::read_manifest(dir / "test/counter/manifest.json");
  fs::remove(dir / "test/counter" / m.samples[0].masks_dir / "0.png");
  EXPECT_EQ(occam_cli({"classify-eval", "--manifest", (dir / "test/counter/manifest.json").string(), "--head",
                       (dir / "head/head.json").string(), "--mask-model", "file", "--target-size", "64", "--out",
                       (dir / "c").string()}),
            1);
  const auto rep = report(dir / "c");
  EXPECT_EQ(rep["errors"][0]["id"], m.samples[0].id);
  EXPECT_EQ(rep["rows"][0]["n_samples"], 39);
}

TEST(Cli, GapReport) {
  TempDir dir;
  toy_world(dir);
  ASSERT_EQ(occam_cli({"gap", "--manifest-common", (dir / "test/common/manifest.json").string(), "--manifest-counter",
                       (dir / "test/counter/manifest.json").string(), "--head", (dir / "head/head.json").string(),
                       "--mask-model", "gt", "--strategy", "class_aided", "--target-size", "64", "--out",
                       (dir / "g").string()}),
            0);
  const auto rep = report(dir / "g");
  EXPECT_GE(metric(rep, "gap", {{"method", "baseline"}}), 0.25);
  EXPECT_LT(std::abs(metric(rep, "gap", {{"method", "occam"}})), 0.02);
}

TEST(Cli, HeadLabelMismatchIsRefused) {
  TempDir dir;
  toy_world(dir);
  // a head over the wrong number of labels is refused
  occam::ClassifierHead h;
  h.class_names = {"a", "b", "c"};
  h.class_embeddings.assign(3, std::vector<double>(12, 0.0));
  for (int c = 0; c < 3; ++c) h.class_embeddings[c][c] = 1;
  occam::write_head_json(dir / "bad.json", h);
  EXPECT_EQ(occam_cli({"classify-eval", "--manifest", (dir / "test/counter/manifest.json").string(), "--head",
                       (dir / "bad.json").string(), "--out", (dir / "c").string()}),
            1);
}

TEST(Cli, EmptyManifestWarns) {
  TempDir dir;
  occam::write_manifest(dir / "m.json", occam::Manifest{});
  EXPECT_EQ(occam_cli({"discover-eval", "--manifest", (dir / "m.json").string(), "--out", (dir / "r").string()}), 0);
  const auto rep = report(dir / "r");
  EXPECT_TRUE(rep["rows"].empty());
  EXPECT_GE(rep["warnings"].size(), 1u);
}
