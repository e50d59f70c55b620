// Command-line entry point: synth, pretrain, finetune, probe, gradcheck, mi-bench, ablation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gmvp/ablation.hpp"
#include "gmvp/checkpoint.hpp"
#include "gmvp/config.hpp"
#include "gmvp/errors.hpp"
#include "gmvp/loss_check.hpp"
#include "gmvp/mi_bench.hpp"
#include "gmvp/molio.hpp"
#include "gmvp/probe.hpp"
#include "gmvp/report.hpp"
#include "gmvp/synth.hpp"
#include "gmvp/trainer.hpp"

namespace fs = std::filesystem;
using namespace gmvp;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Configuration problems detected before any work starts.
struct UsageError : Error {
  using Error::Error;
};

struct Common {
  std::optional<std::string> config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string dataset;
  std::string mode;
  std::string loss;
  std::string variant;
  bool lenient = false;
};

TrainConfig resolve_config(const Common& c) {
  TrainConfig cfg;
  if (c.config) {
    if (!fs::exists(*c.config)) throw UsageError("config file not found: " + *c.config);
    try {
      cfg = load_train_config(*c.config);
    } catch (const ConfigError& e) {
      throw UsageError(*c.config + ": " + e.what());
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  try {
    if (!c.loss.empty() && c.loss != "combined") {
      if (c.loss == "infonce" || c.loss == "ebm_nce") {
        cfg.loss.contrastive = parse_contrastive_kind(c.loss);
        cfg.loss.generative = GenerativeKind::none;
      } else {
        cfg.loss.contrastive = ContrastiveKind::none;
        cfg.loss.generative = parse_generative_kind(c.loss);
      }
    }
    if (!c.variant.empty()) cfg.loss.variant = parse_variant(c.variant);
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

// Without --dataset, the default synthetic set for `seed` is used.
std::vector<MoleculeRecord> load_records(const Common& c, std::uint64_t seed) {
  if (c.dataset.empty()) {
    SynthSpec spec;
    spec.seed = seed;
    return gen_synthetic(spec).records;
  }
  if (!fs::exists(c.dataset)) throw UsageError("dataset file not found: " + c.dataset);
  return read_dataset(c.dataset, ParseOptions{c.lenient}).records;
}

fs::path out_dir(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  fs::create_directories(c.out);
  return c.out;
}

void add_common(CLI::App* app, Common& c, bool config, bool dataset) {
  if (config) app->add_option("--config", c.config, "JSON training configuration");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--seed", c.seed, "Seed controlling all randomness");
  if (dataset) {
    app->add_option("--dataset", c.dataset, "JSONL dataset (default: synthetic set for --seed)");
    app->add_flag("--lenient", c.lenient, "Ignore unknown keys in dataset records");
  }
}

int run_synth(const Common& c, const SynthSpec& base, const std::string& kind) {
  SynthSpec spec = base;
  try {
    spec.kind = parse_synth_kind(kind);
    if (c.seed) spec.seed = *c.seed;
    spec.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = out_dir(c);
  const Dataset data = gen_synthetic(spec);
  write_dataset(dir / "dataset.jsonl", data);
  std::cout << "wrote " << data.records.size() << " records to " << (dir / "dataset.jsonl").string()
            << '\n';
  return 0;
}

int run_pretrain(const Common& c, const std::string& resume_path) {
  const TrainConfig cfg = resolve_config(c);
  const fs::path dir = out_dir(c);
  const auto records = load_records(c, cfg.seed);
  PretrainOptions options;
  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
    options.resume = &*resume;
  }
  const PretrainResult result = pretrain(records, cfg, options);
  save_checkpoint(dir / "model.gmvp", result.checkpoint);
  result.metrics.write(dir / "metrics.jsonl");
  const auto& m = result.metrics.records();
  if (!m.empty()) {
    std::printf("steps %llu final loss %.6f\n", static_cast<unsigned long long>(m.back().step),
                m.back().loss);
  }
  return 0;
}

int run_probe(const Common& c, ProbeMode default_mode, const std::string& checkpoint_path,
              ProbeConfig probe, const std::string& task) {
  TrainConfig cfg = resolve_config(c);
  try {
    probe.mode = c.mode.empty() ? default_mode : parse_probe_mode(c.mode);
    probe.task = parse_probe_task(task);
    probe.seed = cfg.seed;
    probe.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = out_dir(c);
  const auto records = load_records(c, cfg.seed);
  ParamStore params;
  if (checkpoint_path.empty()) {
    params = initial_params(cfg);
  } else {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    cfg.model = ckpt.config.model;
    params = ckpt.params;
  }
  const ProbeResult r = finetune_probe(params, cfg.model, records, probe);
  EvalReport report;
  report.task = std::string(probe.mode == ProbeMode::full_finetune ? "finetune" : "probe") + ":" +
                (probe.label.empty() ? "label" : probe.label);
  report.metric = r.metric;
  report.seeds = {cfg.seed};
  report.per_seed = {r.value};
  report.finalize();
  report.config_digest = config_digest(to_json(cfg));
  report.extra = {{"train_value", r.train_value}, {"test_size", r.test_indices.size()}};
  report.write(dir / "report.json");
  std::printf("%s %.6f\n", r.metric.c_str(), r.value);
  return 0;
}

int run_gradcheck(const Common& c) {
  const std::string loss = c.loss.empty() ? "combined" : c.loss;
  Variant variant = Variant::plain;
  bool known = false;
  for (auto n : checkable_losses()) known |= n == loss;
  try {
    if (!known) throw ConfigError("unknown loss '" + loss + "'");
    if (!c.variant.empty()) variant = parse_variant(c.variant);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const GradCheckResult r = check_loss_gradients(loss, variant, c.seed.value_or(0));
  std::printf("max relative error %.3e (%s[%zu], analytic %.9g, numeric %.9g, %zu entries)\n",
              r.max_rel_error, r.worst_param.c_str(), r.worst_index, r.analytic, r.numeric,
              r.entries_checked);
  return r.max_rel_error < 1e-4 ? 0 : kExitRuntime;
}

int run_mi_bench(const Common& c, const MiBenchConfig& cfg, std::vector<std::uint64_t> seeds) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (c.seed) seeds = {*c.seed};
  const EvalReport report = mi_bench_report(cfg, seeds);
  if (!c.out.empty()) report.write(out_dir(c) / "report.json");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::printf("seed %llu estimate %.6f\n", static_cast<unsigned long long>(seeds[i]),
                report.per_seed[i]);
  }
  std::printf("mean %.6f true %.6f log K %.6f\n", report.value,
              report.extra["true_mi"].get<double>(), report.extra["log_k"].get<double>());
  return 0;
}

int run_ablation(const Common& c, AblationConfig cfg, std::vector<std::uint64_t> seeds) {
  if (c.config) {
    const TrainConfig base = resolve_config(c);
    cfg.train.model = base.model;
    cfg.train.loss.alpha1 = base.loss.alpha1;
    cfg.train.loss.alpha2 = base.loss.alpha2;
    cfg.train.loss.beta = base.loss.beta;
    cfg.train.mask_ratio = base.mask_ratio;
    cfg.train.num_conformers = base.num_conformers;
    cfg.train.batch_size = base.batch_size;
    cfg.train.lr = base.lr;
  }
  if (c.seed) seeds = {*c.seed};
  cfg.seeds = seeds;
  const fs::path dir = out_dir(c);
  const AblationReport report = run_ablation(cfg);
  std::ofstream out(dir / "ablation.json", std::ios::binary | std::ios::trunc);
  out << report.to_json().dump(2) << '\n';
  std::printf("%-16s %s\n", "cell", report.metric.c_str());
  std::printf("%-16s %.4f\n", "random_init", report.random_init);
  for (const auto& cell : report.cells) {
    std::printf("%-16s %.4f\n", cell.cell.name().c_str(), cell.mean_probe);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view (2D graph / 3D geometry) molecular pre-training"};
  app.require_subcommand(1);

  Common common;
  SynthSpec synth;
  std::string synth_kind = "mixed";
  std::string resume;
  std::string checkpoint;
  std::string task = "multiclass";
  ProbeConfig probe;
  probe.label = "diameter_class";
  MiBenchConfig mi;
  std::vector<std::uint64_t> mi_seeds{0, 1, 2};
  AblationConfig ablation;
  std::vector<std::uint64_t> ablation_seeds{0};

  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(s, common, false, false);
  s->add_option("--kind", synth_kind, "chain|ring|branched|mixed");
  s->add_option("--count", synth.count, "Number of records");
  s->add_option("--min-atoms", synth.min_atoms);
  s->add_option("--max-atoms", synth.max_atoms);
  s->add_option("--noise", synth.noise, "Coordinate noise (Angstrom)");

  auto* p = app.add_subcommand("pretrain", "Multi-view pre-training");
  add_common(p, common, true, true);
  p->add_option("--loss", common.loss, "infonce|ebm_nce|vrr|rr|combined");
  p->add_option("--variant", common.variant, "plain|G|C");
  p->add_option("--resume", resume, "Checkpoint to continue from");

  auto* f = app.add_subcommand("finetune", "Train a head and the 2D encoder on labels");
  auto* q = app.add_subcommand("probe", "Train a linear head on frozen 2D representations");
  for (auto* sub : {f, q}) {
    add_common(sub, common, true, true);
    sub->add_option("--checkpoint", checkpoint, "Pre-trained model (.gmvp); random init if absent");
    sub->add_option("--mode", common.mode, "frozen|full");
    sub->add_option("--task", task, "binary|regression|multiclass");
    sub->add_option("--label", probe.label, "Label name (\"label\" for the primary label)");
    sub->add_option("--epochs", probe.epochs);
    sub->add_option("--lr", probe.lr);
  }

  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of a loss");
  g->add_option("--loss", common.loss, "infonce|ebm_nce|vrr|rr|attr_mask|combined");
  g->add_option("--variant", common.variant, "plain|G|C");
  g->add_option("--seed", common.seed);

  auto* m = app.add_subcommand("mi-bench", "InfoNCE estimate on correlated Gaussians");
  add_common(m, common, false, false);
  m->add_option("--rho", mi.rho);
  m->add_option("--dim", mi.dim);
  m->add_option("--k", mi.batch_size, "Batch size K");
  m->add_option("--steps", mi.steps);
  m->add_option("--seeds", mi_seeds, "Seeds to average (overridden by --seed)");

  auto* a = app.add_subcommand("ablation", "Objective ablation with a frozen diameter probe");
  add_common(a, common, true, false);
  a->add_option("--count", ablation.data.count, "Synthetic records per seed");
  a->add_option("--epochs", ablation.train.epochs, "Pre-training epochs per cell");
  a->add_option("--seeds", ablation_seeds, "Seeds (overridden by --seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string what = e.what();
    std::cerr << "error: " << what.substr(0, what.find('\n')) << '\n';
    return kExitUsage;
  }

  try {
    if (*s) return run_synth(common, synth, synth_kind);
    if (*p) return run_pretrain(common, resume);
    if (*f) return run_probe(common, ProbeMode::full_finetune, checkpoint, probe, task);
    if (*q) return run_probe(common, ProbeMode::frozen_linear_probe, checkpoint, probe, task);
    if (*g) return run_gradcheck(common);
    if (*m) return run_mi_bench(common, mi, mi_seeds);
    if (*a) return run_ablation(common, ablation, ablation_seeds);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
