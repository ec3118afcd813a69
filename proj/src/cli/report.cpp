#include "report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace occam::cli {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string to_json(const Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json j = {{"config", r.config}, {"metric", r.metric}, {"value", r.value}, {"n_samples", r.n_samples}};
    if (r.per_group) {
      nlohmann::json groups = nlohmann::json::object();
      for (const auto& [g, v] : *r.per_group) groups[std::to_string(g)] = {{"value", v.first}, {"n_samples", v.second}};
      j["per_group"] = std::move(groups);
    }
    rows.push_back(std::move(j));
  }
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& [id, msg] : report.errors) errors.push_back({{"id", id}, {"message", msg}});
  const nlohmann::json doc = {
      {"command", report.command}, {"rows", rows}, {"errors", errors}, {"warnings", report.warnings}};
  return doc.dump(2) + "\n";
}

std::string to_csv(const Report& report) {
  std::set<std::string> keys;
  for (const auto& r : report.rows)
    for (const auto& [k, v] : r.config) keys.insert(k);

  std::ostringstream os;
  for (const auto& k : keys) os << csv_field(k) << ',';
  os << "metric,group,value,n_samples\n";
  auto prefix = [&](const ReportRow& r) {
    for (const auto& k : keys) {
      auto it = r.config.find(k);
      os << (it == r.config.end() ? "" : csv_field(it->second)) << ',';
    }
    os << csv_field(r.metric) << ',';
  };
  for (const auto& r : report.rows) {
    prefix(r);
    os << ',' << number(r.value) << ',' << r.n_samples << '\n';
    if (!r.per_group) continue;
    for (const auto& [g, v] : *r.per_group) {
      prefix(r);
      os << g << ',' << number(v.first) << ',' << v.second << '\n';
    }
  }
  return os.str();
}

std::filesystem::path write_report(const Report& report, const std::filesystem::path& dir, const std::string& format) {
  const bool csv = format == "csv";
  if (!csv && format != "json") throw std::invalid_argument("unknown report format '" + format + "'");
  const auto path = dir / (csv ? "report.csv" : "report.json");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << (csv ? to_csv(report) : to_json(report));
  if (!os) throw std::runtime_error("failed writing " + path.string());
  return path;
}

}  // namespace occam::cli
