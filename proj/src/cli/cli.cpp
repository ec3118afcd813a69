#include "occam/cli.hpp"

#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "commands.hpp"
#include "occam/fgscore.hpp"

namespace occam::cli {

namespace {

void add_model_options(CLI::App* sub, ModelOptions& m) {
  sub->add_option("--encoder", m.encoders, "'toy' or an embedding table (.oce); repeat for an ensemble");
  sub->add_option("--head", m.heads, "head JSON or text-embedding table (.oce); one per encoder or one shared")
      ->required();
  sub->add_option("--final-member", m.final_member, "classify with this ensemble member only");
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Object-centric classification with mask-based foreground selection"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::string data_root;
  auto* root_opt = app.add_option("--data-root", data_root, "base for relative manifest paths");
  app.add_option("--out", g.out, "output directory (its parent must exist)");
  app.add_option("--seed", g.seed, "seed for synthetic data and mask noise");
  app.add_option("--threads", g.threads, "worker threads; 0 uses all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--target-size", g.target_size, "side of gray-crop applied images")->check(CLI::PositiveNumber);
  app.add_option("--temperature", g.temperature, "logit scale of heads built from text embeddings")
      ->check(CLI::PositiveNumber);

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "write a synthetic spurious-background dataset");
  s->add_option("--n", synth.n, "samples per split")->check(CLI::NonNegativeNumber);
  s->add_option("--size", synth.size, "image side in pixels");
  s->add_option("--classes", synth.classes, "number of classes");
  s->add_option("--rho", synth.rho, "probability the background matches the label");
  s->add_option("--mask-noise", synth.mask_noise, "perturb written candidate masks by up to this many pixels")
      ->check(CLI::NonNegativeNumber);
  s->add_option("--split", synth.split, "single dataset or common/counter pair")
      ->check(CLI::IsMember({"single", "counter"}));
  s->add_option("--prefix", synth.prefix, "sample id prefix");

  FitHeadOptions fit;
  auto* f = app.add_subcommand("fit-head", "fit a toy nearest-prototype head on whole images");
  f->add_option("--manifest", fit.manifest)->required();
  f->add_option("--mode", fit.mode)->check(CLI::IsMember({"gray_crop", "alpha"}));

  DiscoverOptions disc;
  auto* d = app.add_subcommand("discover-eval", "FG-ARI and mBO of candidate masks");
  d->add_option("--manifest", disc.manifest)->required();
  d->add_option("--pred-source", disc.pred_source)->check(CLI::IsMember({"masks", "gt"}));
  d->add_flag("--shuffle-pred", disc.shuffle_pred, "permute predicted masks before scoring");

  std::vector<std::string> strategy_names;
  for (auto st : all_strategies()) strategy_names.emplace_back(to_string(st));
  const std::vector<std::string> mask_models = {"none", "gt", "noisy", "file"};

  FgEvalOptions fg;
  auto* e = app.add_subcommand("fg-eval", "foreground-detection AUROC per scoring strategy");
  e->add_option("--manifest", fg.manifest)->required();
  add_model_options(e, fg.model);
  e->add_option("--mask-model", fg.mask_model)->check(CLI::IsMember(mask_models));
  e->add_option("--mode", fg.mode)->check(CLI::IsMember({"gray_crop", "alpha"}));
  e->add_option("--strategy", fg.strategies, "default: all")->check(CLI::IsMember(strategy_names));
  e->add_option("--noise-radius", fg.noise_radius)->check(CLI::NonNegativeNumber);

  ClassifyOptions cls;
  auto* c = app.add_subcommand("classify-eval", "accuracy and worst-group accuracy over a factor grid");
  c->add_option("--manifest", cls.manifest)->required();
  add_model_options(c, cls.model);
  c->add_option("--mask-model", cls.mask_models)->check(CLI::IsMember(mask_models));
  c->add_option("--mode", cls.modes)->check(CLI::IsMember({"gray_crop", "alpha"}));
  c->add_option("--strategy", cls.strategies)->check(CLI::IsMember(strategy_names));
  c->add_option("--noise-radius", cls.noise_radius)->check(CLI::NonNegativeNumber);
  c->add_flag("--audit", cls.audit, "write per-sample JSONL logs under <out>/audit");

  GapOptions gap;
  auto* p = app.add_subcommand("gap", "common/counter accuracy gap with and without object-centric masking");
  p->add_option("--manifest-common", gap.manifest_common)->required();
  p->add_option("--manifest-counter", gap.manifest_counter)->required();
  add_model_options(p, gap.model);
  p->add_option("--mask-model", gap.mask_model)->check(CLI::IsMember(mask_models));
  p->add_option("--mode", gap.mode)->check(CLI::IsMember({"gray_crop", "alpha"}));
  p->add_option("--strategy", gap.strategy)->check(CLI::IsMember(strategy_names));
  p->add_option("--noise-radius", gap.noise_radius)->check(CLI::NonNegativeNumber);

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }
  if (*root_opt) g.data_root = data_root;

  try {
    if (*s) return cmd_synth(g, synth);
    if (*f) return cmd_fit_head(g, fit);
    if (*d) return cmd_discover_eval(g, disc);
    if (*e) return cmd_fg_eval(g, fg);
    if (*c) return cmd_classify_eval(g, cls);
    if (*p) return cmd_gap(g, gap);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"occam"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace occam::cli
