#include "occam/metrics.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace occam {

std::vector<std::int32_t> InstanceSegmentation::instance_ids() const {
  std::vector<std::int32_t> ids;
  for (auto v : labels)
    if (v > 0) ids.push_back(v);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

BinaryMask InstanceSegmentation::instance_mask(std::int32_t id) const {
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) bits[i] = labels[i] == id ? 1 : 0;
  return BinaryMask(height, width, std::move(bits));
}

void InstanceSegmentation::validate() const {
  if (height < 1 || width < 1) throw std::invalid_argument("instance segmentation dimensions must be positive");
  if (labels.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("instance segmentation label count does not match H*W");
  }
  for (auto v : labels)
    if (v < 0) throw std::invalid_argument("instance ids must be non-negative");
}

std::vector<std::int32_t> partition_from_masks(const MaskSet& pred, ImageDims dims) {
  pred.check_dims(dims);
  const auto unassigned = static_cast<std::int32_t>(pred.size());
  std::vector<std::int32_t> part(dims.pixels(), unassigned);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const auto bits = pred.masks[k].bits();
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) part[i] = static_cast<std::int32_t>(k);
  }
  return part;
}

namespace {

std::int64_t pairs(std::int64_t n) { return n * (n - 1) / 2; }

}  // namespace

double fg_ari(const InstanceSegmentation& gt, const MaskSet& pred) {
  gt.validate();
  const auto part = partition_from_masks(pred, gt.dims());

  // Contingency counts over foreground pixels only.
  std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> cells;
  std::unordered_map<std::int32_t, std::int64_t> rows;
  std::unordered_map<std::int32_t, std::int64_t> cols;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const auto g = gt.labels[i];
    if (g == 0) continue;
    ++cells[{g, part[i]}];
    ++rows[g];
    ++cols[part[i]];
    ++n;
  }
  if (n == 0) throw std::invalid_argument("FG-ARI undefined: ground truth has no foreground pixels");

  std::int64_t index = 0;
  std::int64_t sum_rows = 0;
  std::int64_t sum_cols = 0;
  for (const auto& [key, count] : cells) index += pairs(count);
  for (const auto& [key, count] : rows) sum_rows += pairs(count);
  for (const auto& [key, count] : cols) sum_cols += pairs(count);
  const std::int64_t total = pairs(n);

  const long double a = static_cast<long double>(sum_rows);
  const long double b = static_cast<long double>(sum_cols);
  // Both partitions trivial (all one cluster or all singletons) and hence identical.
  if (total == 0 || (sum_rows == sum_cols && (sum_rows == 0 || sum_rows == total))) return 1.0;
  const long double expected = a * b / static_cast<long double>(total);
  const long double max_index = (a + b) / 2.0L;
  return static_cast<double>((static_cast<long double>(index) - expected) / (max_index - expected));
}

double mbo(const InstanceSegmentation& gt, const MaskSet& pred) {
  gt.validate();
  pred.check_dims(gt.dims());
  const auto ids = gt.instance_ids();
  if (ids.empty()) throw std::invalid_argument("mBO undefined: ground truth has no instances");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (auto id : ids) {
    const auto m = gt.instance_mask(id);
    double best = 0.0;
    for (const auto& p : pred.masks) best = std::max(best, iou(m, p));
    sum += best;
  }
  return sum / static_cast<double>(ids.size());
}

double accuracy(const GroupedResults& results) {
  if (results.records.empty()) throw std::invalid_argument("accuracy of an empty result set");
  std::size_t correct = 0;
  for (const auto& r : results.records) correct += r.predicted == r.truth ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(results.records.size());
}

WorstGroup worst_group_accuracy(const GroupedResults& results) {
  if (results.records.empty()) throw std::invalid_argument("worst-group accuracy of an empty result set");
  WorstGroup out;
  for (const auto& r : results.records) {
    if (!r.group) throw std::invalid_argument("worst-group accuracy: sample " + r.sample_id + " has no group");
    auto& g = out.per_group[*r.group];
    ++g.total;
    g.correct += r.predicted == r.truth ? 1 : 0;
  }
  out.wga = std::numeric_limits<double>::infinity();
  for (const auto& [id, g] : out.per_group) out.wga = std::min(out.wga, g.accuracy());
  return out;
}

GapResult common_counter_gap(const GroupedResults& common, const GroupedResults& counter) {
  GapResult out;
  out.acc_common = accuracy(common);
  out.acc_counter = accuracy(counter);
  out.gap = out.acc_common - out.acc_counter;
  return out;
}

}  // namespace occam
