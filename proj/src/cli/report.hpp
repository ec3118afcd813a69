#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace occam::cli {

struct ReportRow {
  std::map<std::string, std::string> config;
  std::string metric;
  double value = 0.0;
  std::size_t n_samples = 0;
  std::optional<std::map<int, std::pair<double, std::size_t>>> per_group;  // accuracy, count
};

struct Report {
  std::string command;
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, std::string>> errors;  // (sample id or context, message)
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

std::string to_json(const Report& report);
std::string to_csv(const Report& report);

// Writes report.json or report.csv under `dir`; returns the path.
std::filesystem::path write_report(const Report& report, const std::filesystem::path& dir, const std::string& format);

}  // namespace occam::cli
