#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "report.hpp"

namespace occam::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::optional<fs::path> data_root;
  fs::path out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string format = "json";
  int target_size = 224;
  double temperature = 100.0;
};

struct ModelOptions {
  std::vector<std::string> encoders{"toy"};  // "toy" or an .oce table per member
  std::vector<std::string> heads;            // head .json or text-embedding .oce; one per member or one shared
  std::optional<std::size_t> final_member;
};

struct SynthOptions {
  int n = 200;
  int size = 64;
  int classes = 2;
  double rho = 1.0;
  int mask_noise = 0;
  std::string split = "single";  // single | counter
  std::string prefix = "s";
};

struct FitHeadOptions {
  fs::path manifest;
  std::string mode = "gray_crop";
};

struct DiscoverOptions {
  fs::path manifest;
  std::string pred_source = "masks";  // masks | gt
  bool shuffle_pred = false;
};

struct FgEvalOptions {
  fs::path manifest;
  ModelOptions model;
  std::string mask_model = "file";
  std::string mode = "gray_crop";
  std::vector<std::string> strategies;
  int noise_radius = 2;
};

struct ClassifyOptions {
  fs::path manifest;
  ModelOptions model;
  std::vector<std::string> mask_models{"none", "file"};
  std::vector<std::string> modes{"gray_crop"};
  std::vector<std::string> strategies{"ensemble_entropy"};
  int noise_radius = 2;
  bool audit = false;
};

struct GapOptions {
  fs::path manifest_common;
  fs::path manifest_counter;
  ModelOptions model;
  std::string mask_model = "file";
  std::string mode = "gray_crop";
  std::string strategy = "ensemble_entropy";
  int noise_radius = 2;
};

// Each returns the process exit code.
int cmd_synth(const GlobalOptions& g, const SynthOptions& o);
int cmd_fit_head(const GlobalOptions& g, const FitHeadOptions& o);
int cmd_discover_eval(const GlobalOptions& g, const DiscoverOptions& o);
int cmd_fg_eval(const GlobalOptions& g, const FgEvalOptions& o);
int cmd_classify_eval(const GlobalOptions& g, const ClassifyOptions& o);
int cmd_gap(const GlobalOptions& g, const GapOptions& o);

}  // namespace occam::cli
