#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>

#include "occam/backend.hpp"
#include "occam/fgscore.hpp"
#include "occam/interchange.hpp"
#include "occam/metrics.hpp"
#include "occam/parallel.hpp"
#include "occam/pipeline.hpp"
#include "occam/random.hpp"
#include "occam/synthgen.hpp"

namespace occam::cli {

namespace {

void prepare_out(const fs::path& out) {
  if (out.empty()) throw std::invalid_argument("--out is required");
  const fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw std::invalid_argument("parent of --out does not exist: " + parent.string());
  fs::create_directories(out);
}

LoadedDataset load(const fs::path& manifest, const GlobalOptions& g, Report& report) {
  LoadOptions opts;
  opts.data_root = g.data_root;
  LoadedDataset ds = load_dataset_manifest(manifest, opts);
  for (const auto& e : ds.errors) report.errors.emplace_back(e.sample_id, e.message);
  for (const auto& w : ds.warnings) report.warnings.push_back(w);
  return ds;
}

ApplicationMode parse_mode(const std::string& name, int target) {
  if (name == "gray_crop") return GrayBgCrop{target, target, 0.5f};
  if (name == "alpha") return AlphaChannel{};
  throw std::invalid_argument("unknown mode '" + name + "' (expected gray_crop or alpha)");
}

std::unique_ptr<MaskGenerator> make_maskgen(const std::string& name, const LoadedDataset& ds, int noise_radius,
                                            std::uint64_t seed) {
  if (name == "none") return std::make_unique<NoMaskGenerator>();
  if (name == "gt") return std::make_unique<GroundTruthMaskGenerator>();
  if (name == "noisy") return std::make_unique<NoisyMaskGenerator>(noise_radius, seed);
  if (name == "file") return std::make_unique<FileMaskGenerator>(ds);
  throw std::invalid_argument("unknown mask model '" + name + "' (expected none, gt, noisy or file)");
}

ClassifierHead load_head(const std::string& path, const ClassNames& names, double temperature) {
  const fs::path p(path);
  if (p.extension() == ".json") return read_head_json(p);
  return head_from_text_embeddings(read_embedding_table(p), names, temperature);
}

EnsembleSpec build_ensemble(const ModelOptions& m, const LoadedDataset& ds, const GlobalOptions& g,
                            const std::string& mode) {
  if (m.encoders.empty()) throw std::invalid_argument("at least one --encoder is required");
  if (m.heads.empty()) throw std::invalid_argument("--head is required");
  if (m.heads.size() != 1 && m.heads.size() != m.encoders.size()) {
    throw std::invalid_argument("give one --head per --encoder, or a single shared --head");
  }
  EnsembleSpec ens;
  for (std::size_t i = 0; i < m.encoders.size(); ++i) {
    std::shared_ptr<const Encoder> enc;
    if (m.encoders[i] == "toy") {
      enc = std::make_shared<ToyEncoder>();
    } else {
      auto file = FileEncoder::open(m.encoders[i]);
      if (file->mode() && *file->mode() != mode) {
        throw std::invalid_argument("embeddings in " + m.encoders[i] + " were computed for mode " + *file->mode() +
                                    ", not " + mode);
      }
      enc = std::move(file);
    }
    ClassifierHead head = load_head(m.heads[m.heads.size() == 1 ? 0 : i], ds.class_names, g.temperature);
    const auto labels = ds.class_names.labels().size();
    if (labels != 0 && head.num_labels() != labels) {
      throw std::invalid_argument("head predicts " + std::to_string(head.num_labels()) + " labels, dataset has " +
                                  std::to_string(labels));
    }
    ens.members.push_back({std::move(enc), std::move(head)});
  }
  ens.final_member = m.final_member;
  ens.validate();
  return ens;
}

bool needs_pixels(const EnsembleSpec& ens) {
  return std::any_of(ens.members.begin(), ens.members.end(),
                     [](const auto& m) { return m.encoder->info().needs_pixels; });
}

std::vector<std::string> entry_ids(const LoadedDataset& ds) {
  std::vector<std::string> ids;
  for (const auto& e : ds.entries) ids.push_back(e.record.id);
  return ids;
}

BenchmarkRun benchmark(const LoadedDataset& ds, const MaskGenerator& maskgen, const EnsembleSpec& ens,
                       const OccamConfig& cfg, unsigned threads) {
  const bool pixels = needs_pixels(ens);
  const auto ids = entry_ids(ds);
  return run_benchmark(
      ds.entries.size(), [&](std::size_t i) { return ds.entries[i].to_sample(pixels); }, ids, maskgen, ens, cfg,
      threads);
}

std::string describe(const std::map<std::string, std::string>& config) {
  std::string s;
  for (const auto& [k, v] : config) s += (s.empty() ? "" : " ") + k + "=" + v;
  return s;
}

void add_errors(Report& report, const BenchmarkRun& run, const std::map<std::string, std::string>& config) {
  for (const auto& [id, msg] : run.errors) report.errors.emplace_back(id, "[" + describe(config) + "] " + msg);
}

void add_accuracy_rows(Report& report, const std::map<std::string, std::string>& config, const GroupedResults& res) {
  if (res.records.empty()) {
    report.warnings.push_back("no results for " + describe(config));
    return;
  }
  report.rows.push_back({config, "accuracy", accuracy(res), res.records.size(), std::nullopt});
  const bool grouped = std::all_of(res.records.begin(), res.records.end(), [](const auto& r) { return r.group; });
  if (!grouped) return;
  const auto wg = worst_group_accuracy(res);
  std::map<int, std::pair<double, std::size_t>> per_group;
  for (const auto& [g, acc] : wg.per_group) per_group[g] = {acc.accuracy(), acc.total};
  report.rows.push_back({config, "worst_group_accuracy", wg.wga, res.records.size(), std::move(per_group)});
}

int finish(const Report& report, const GlobalOptions& g) {
  const auto path = write_report(report, g.out, g.format);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& [id, msg] : report.errors) std::cerr << "error: " << id << ": " << msg << '\n';
  std::cout << report.command << ": " << report.rows.size() << " metric rows, " << report.errors.size()
            << " errors -> " << path.string() << '\n';
  return report.ok() ? 0 : 1;
}

}  // namespace

int cmd_synth(const GlobalOptions& g, const SynthOptions& o) {
  prepare_out(g.out);
  SynthSpec spec;
  spec.n_samples = o.n;
  spec.height = o.size;
  spec.width = o.size;
  spec.n_classes = o.classes;
  spec.rho = o.rho;
  spec.seed = g.seed;
  spec.id_prefix = o.prefix;
  // Shape sizes follow the image size; the defaults are tuned for 64x64.
  spec.object_min = std::max(1, o.size * 28 / 64);
  spec.object_max = std::max(spec.object_min, o.size * 44 / 64);
  spec.distractor_min_size = std::max(1, o.size * 6 / 64);
  spec.distractor_max_size = std::max(spec.distractor_min_size, o.size * 10 / 64);
  WriteOptions wo;
  wo.mask_noise_radius = o.mask_noise;
  wo.noise_seed = g.seed;

  if (o.split == "single") {
    const auto path = write_dataset(generate(spec, g.threads), g.out, wo);
    std::cout << "synth: " << spec.n_samples << " samples -> " << path.string() << '\n';
  } else if (o.split == "counter") {
    const auto [common, counter] = counter_split(spec, g.threads);
    const auto a = write_dataset(common, g.out / "common", wo);
    const auto b = write_dataset(counter, g.out / "counter", wo);
    std::cout << "synth: " << spec.n_samples << " + " << spec.n_samples << " samples -> " << a.string() << ", "
              << b.string() << '\n';
  } else {
    throw std::invalid_argument("unknown --split '" + o.split + "' (expected single or counter)");
  }
  return 0;
}

int cmd_fit_head(const GlobalOptions& g, const FitHeadOptions& o) {
  prepare_out(g.out);
  Report report;
  report.command = "fit-head";
  const LoadedDataset ds = load(o.manifest, g, report);
  const ApplicationMode mode = parse_mode(o.mode, g.target_size);
  const ToyEncoder encoder;

  std::vector<std::optional<Embedding>> features(ds.entries.size());
  std::vector<std::optional<std::string>> errors(ds.entries.size());
  parallel_for(ds.entries.size(), g.threads, [&](std::size_t i) {
    try {
      const LabeledSample s = ds.entries[i].to_sample(true);
      const BinaryMask full(s.dims.height, s.dims.width, true);
      const AppliedImage applied = apply_mask(*s.image, full, mode, -1);
      features[i] = encoder.encode({s.id, -1, &applied});
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<Embedding> fit;
  std::vector<int> labels;
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    if (errors[i]) {
      report.errors.emplace_back(ds.entries[i].record.id, *errors[i]);
      continue;
    }
    fit.push_back(std::move(*features[i]));
    labels.push_back(ds.entries[i].record.label);
  }
  if (fit.empty()) throw std::runtime_error("no usable samples to fit a head on");
  const ClassifierHead head = fit_prototype_head(fit, labels, ds.class_names.labels(), g.temperature);
  const auto path = g.out / "head.json";
  write_head_json(path, head);
  for (const auto& [id, msg] : report.errors) std::cerr << "error: " << id << ": " << msg << '\n';
  std::cout << "fit-head: " << fit.size() << " samples -> " << path.string() << '\n';
  return report.ok() ? 0 : 1;
}

int cmd_discover_eval(const GlobalOptions& g, const DiscoverOptions& o) {
  prepare_out(g.out);
  if (o.pred_source != "masks" && o.pred_source != "gt") {
    throw std::invalid_argument("unknown --pred-source '" + o.pred_source + "' (expected masks or gt)");
  }
  Report report;
  report.command = "discover-eval";
  const LoadedDataset ds = load(o.manifest, g, report);

  struct Terms {
    double ari = 0.0;
    double mbo = 0.0;
  };
  std::vector<std::optional<Terms>> terms(ds.entries.size());
  std::vector<std::optional<std::string>> errors(ds.entries.size());
  parallel_for(ds.entries.size(), g.threads, [&](std::size_t i) {
    const auto& entry = ds.entries[i];
    try {
      const auto seg = entry.load_gt_seg();
      if (!seg) throw std::runtime_error("missing ground-truth segmentation");
      MaskSet pred = o.pred_source == "gt" ? masks_from_instances(*seg) : entry.load_masks();
      if (o.shuffle_pred) {
        SplitMix64 rng(mix_seed(g.seed, entry.record.id));
        for (std::size_t k = pred.masks.size(); k > 1; --k) {
          std::swap(pred.masks[k - 1], pred.masks[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(k) - 1))]);
        }
      }
      terms[i] = Terms{fg_ari(*seg, pred), mbo(*seg, pred)};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  double ari_sum = 0.0;
  double mbo_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    if (errors[i]) {
      report.errors.emplace_back(ds.entries[i].record.id, *errors[i]);
      continue;
    }
    ari_sum += terms[i]->ari;
    mbo_sum += terms[i]->mbo;
    ++n;
  }
  const std::map<std::string, std::string> config = {{"pred_source", o.pred_source}};
  if (n == 0) {
    report.warnings.push_back("no samples evaluated");
  } else {
    report.rows.push_back({config, "fg_ari", ari_sum / static_cast<double>(n), n, std::nullopt});
    report.rows.push_back({config, "mbo", mbo_sum / static_cast<double>(n), n, std::nullopt});
  }
  return finish(report, g);
}

int cmd_fg_eval(const GlobalOptions& g, const FgEvalOptions& o) {
  prepare_out(g.out);
  Report report;
  report.command = "fg-eval";
  const LoadedDataset ds = load(o.manifest, g, report);
  const EnsembleSpec ens = build_ensemble(o.model, ds, g, o.mode);
  const auto maskgen = make_maskgen(o.mask_model, ds, o.noise_radius, g.seed);

  std::vector<ScoringStrategy> strategies;
  for (const auto& s : o.strategies) strategies.push_back(parse_strategy(s));
  if (strategies.empty()) strategies = all_strategies();

  OccamConfig cfg;
  cfg.application_mode = parse_mode(o.mode, g.target_size);
  cfg.scoring = ScoringStrategy::EnsembleEntropy;
  cfg.evaluation_mode = true;
  const bool pixels = needs_pixels(ens);
  const auto& group_map = ens.members.front().head.group_map;

  struct PerSample {
    LabeledSample sample;
    MaskSet kept;
    std::vector<int> indices;
    std::vector<std::vector<double>> scores;  // [strategy][candidate]
    bool no_candidates = false;
  };
  std::vector<std::optional<PerSample>> per(ds.entries.size());
  std::vector<std::optional<std::string>> errors(ds.entries.size());
  parallel_for(ds.entries.size(), g.threads, [&](std::size_t i) {
    try {
      PerSample ps;
      ps.sample = ds.entries[i].to_sample(pixels);
      const CandidateSet cand = score_candidates(ps.sample, *maskgen, ens, cfg);
      ps.sample.image.reset();
      if (cand.fallback_used) {
        ps.no_candidates = true;
        per[i] = std::move(ps);
        return;
      }
      const MaskSet masks = maskgen->generate(ps.sample);
      ps.kept.source = masks.source;
      for (const auto& sm : cand.scored) {
        ps.kept.masks.push_back(masks.masks[static_cast<std::size_t>(sm.mask_index)]);
        ps.indices.push_back(sm.mask_index);
      }
      std::optional<BinaryMask> gt_fg;
      if (std::find(strategies.begin(), strategies.end(), ScoringStrategy::GroundTruthIoU) != strategies.end()) {
        gt_fg = foreground_gt_mask(ps.sample);
      }
      for (const auto strategy : strategies) {
        std::vector<double> scores;
        for (std::size_t k = 0; k < cand.scored.size(); ++k) {
          ScoreAux aux;
          aux.label = ps.sample.label;
          aux.class_to_label = group_map ? &*group_map : nullptr;
          aux.candidate_mask = &ps.kept.masks[k];
          aux.gt_mask = gt_fg ? &*gt_fg : nullptr;
          scores.push_back(score_mask(strategy, cand.scored[k].per_member_probs, aux));
        }
        ps.scores.push_back(std::move(scores));
      }
      per[i] = std::move(ps);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<LabeledSample> samples;
  std::vector<MaskSet> masksets;
  std::vector<std::vector<int>> indices;
  std::vector<const PerSample*> used;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    if (errors[i]) {
      report.errors.emplace_back(ds.entries[i].record.id, *errors[i]);
      continue;
    }
    if (per[i]->no_candidates) {
      ++skipped;
      continue;
    }
    used.push_back(&*per[i]);
    samples.push_back(per[i]->sample);
    masksets.push_back(per[i]->kept);
    indices.push_back(per[i]->indices);
  }
  if (skipped > 0) report.warnings.push_back(std::to_string(skipped) + " samples had no candidate masks after filtering");

  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const std::string name = to_string(strategies[s]);
    std::vector<std::vector<double>> scores;
    for (const auto* ps : used) scores.push_back(ps->scores[s]);
    const FgDetectionDataset fg = build_fg_dataset(samples, masksets, scores, indices);
    if (s == 0) {
      if (fg.skipped_missing_bbox > 0) {
        report.warnings.push_back(std::to_string(fg.skipped_missing_bbox) + " samples skipped: no bounding box");
      }
      for (const auto& id : fg.degenerate_samples) {
        report.warnings.push_back("sample " + id + ": no candidate overlaps the bounding box");
      }
    }
    std::vector<LabeledScore> labeled;
    for (const auto& r : fg.records) labeled.push_back({r.label, r.score});
    try {
      const RocResult roc = roc_auc(labeled);
      std::ofstream os(g.out / ("roc_" + name + ".csv"), std::ios::binary);
      write_roc_csv(os, roc);
      if (!os) throw std::runtime_error("failed writing ROC curve");
      const std::size_t n = samples.size() - fg.skipped_missing_bbox;
      report.rows.push_back({{{"strategy", name}, {"mask_model", o.mask_model}, {"mode", o.mode}},
                             "auroc",
                             roc.auroc,
                             n,
                             std::nullopt});
    } catch (const std::exception& e) {
      report.errors.emplace_back("strategy " + name, e.what());
    }
  }
  return finish(report, g);
}

int cmd_classify_eval(const GlobalOptions& g, const ClassifyOptions& o) {
  prepare_out(g.out);
  Report report;
  report.command = "classify-eval";
  const LoadedDataset ds = load(o.manifest, g, report);
  if (o.audit) fs::create_directories(g.out / "audit");

  for (const auto& mode : o.modes) {
    const EnsembleSpec ens = build_ensemble(o.model, ds, g, mode);
    for (const auto& mask_model : o.mask_models) {
      const auto maskgen = make_maskgen(mask_model, ds, o.noise_radius, g.seed);
      // Without masks the only candidate is the whole image, so the detector is irrelevant.
      const std::vector<std::string> strategies =
          mask_model == "none" ? std::vector<std::string>{"-"} : o.strategies;
      for (const auto& strategy : strategies) {
        OccamConfig cfg;
        cfg.application_mode = parse_mode(mode, g.target_size);
        cfg.scoring = strategy == "-" ? ScoringStrategy::EnsembleEntropy : parse_strategy(strategy);
        cfg.evaluation_mode = true;
        const std::map<std::string, std::string> config = {
            {"mask_model", mask_model}, {"mode", mode}, {"strategy", strategy}};
        const BenchmarkRun run = benchmark(ds, *maskgen, ens, cfg, g.threads);
        add_errors(report, run, config);
        add_accuracy_rows(report, config, run.results);
        if (o.audit) {
          std::ofstream os(g.out / "audit" / (mask_model + "_" + mode + "_" + strategy + ".jsonl"), std::ios::binary);
          write_audit_log(os, run.log, run.results.records);
        }
      }
    }
  }
  return finish(report, g);
}

int cmd_gap(const GlobalOptions& g, const GapOptions& o) {
  prepare_out(g.out);
  Report report;
  report.command = "gap";
  const LoadedDataset common = load(o.manifest_common, g, report);
  const LoadedDataset counter = load(o.manifest_counter, g, report);
  if (!common.entries.empty() && !counter.entries.empty() && common.class_names != counter.class_names) {
    throw std::invalid_argument("common and counter manifests use different class names");
  }
  const LoadedDataset& ref = common.entries.empty() ? counter : common;
  const EnsembleSpec ens = build_ensemble(o.model, ref, g, o.mode);

  struct Variant {
    std::string method;
    std::string mask_model;
    std::string strategy;
  };
  const std::vector<Variant> variants = {{"baseline", "none", "-"}, {"occam", o.mask_model, o.strategy}};
  for (const auto& v : variants) {
    OccamConfig cfg;
    cfg.application_mode = parse_mode(o.mode, g.target_size);
    cfg.scoring = v.strategy == "-" ? ScoringStrategy::EnsembleEntropy : parse_strategy(v.strategy);
    cfg.evaluation_mode = true;
    const std::map<std::string, std::string> config = {
        {"method", v.method}, {"mask_model", v.mask_model}, {"mode", o.mode}, {"strategy", v.strategy}};
    const auto gen_common = make_maskgen(v.mask_model, common, o.noise_radius, g.seed);
    const auto gen_counter = make_maskgen(v.mask_model, counter, o.noise_radius, g.seed);
    const BenchmarkRun a = benchmark(common, *gen_common, ens, cfg, g.threads);
    const BenchmarkRun b = benchmark(counter, *gen_counter, ens, cfg, g.threads);
    add_errors(report, a, config);
    add_errors(report, b, config);
    if (a.results.records.empty() || b.results.records.empty()) {
      report.warnings.push_back("no results for " + describe(config));
      continue;
    }
    const GapResult gap = common_counter_gap(a.results, b.results);
    report.rows.push_back({config, "acc_common", gap.acc_common, a.results.records.size(), std::nullopt});
    report.rows.push_back({config, "acc_counter", gap.acc_counter, b.results.records.size(), std::nullopt});
    report.rows.push_back(
        {config, "gap", gap.gap, a.results.records.size() + b.results.records.size(), std::nullopt});
  }
  return finish(report, g);
}

}  // namespace occam::cli
