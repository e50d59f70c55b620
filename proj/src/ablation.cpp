#include "gmvp/ablation.hpp"

#include <algorithm>
#include <numeric>

#include "gmvp/report.hpp"
#include "gmvp/trainer.hpp"

namespace gmvp {

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double tail_mean(const MetricsLog& log) {
  const auto& r = log.records();
  const std::size_t n = std::max<std::size_t>(1, r.size() / 10);
  double s = 0.0;
  for (std::size_t i = r.size() - n; i < r.size(); ++i) s += r[i].loss;
  return s / static_cast<double>(n);
}

}  // namespace

std::string AblationCell::name() const {
  if (contrastive == ContrastiveKind::none) return std::string(to_string(generative));
  if (generative == GenerativeKind::none) return std::string(to_string(contrastive));
  return std::string(to_string(contrastive)) + "+" + std::string(to_string(generative));
}

std::vector<AblationCell> default_ablation_cells() {
  using C = ContrastiveKind;
  using G = GenerativeKind;
  std::vector<AblationCell> cells{{C::infonce, G::none}, {C::ebm_nce, G::none},
                                  {C::none, G::vrr},     {C::none, G::rr}};
  for (C c : {C::infonce, C::ebm_nce}) {
    for (G g : {G::vrr, G::rr}) cells.push_back({c, g});
  }
  return cells;
}

AblationConfig::AblationConfig() {
  train.epochs = 3;
  data.count = 400;
  probe.task = ProbeTask::multiclass;
  probe.label = "diameter_class";
}

nlohmann::json AblationConfig::to_json() const {
  nlohmann::json cell_names = nlohmann::json::array();
  for (const auto& c : cells) cell_names.push_back(c.name());
  return {{"train", gmvp::to_json(train)},
          {"data",
           {{"kind", std::string(to_string(data.kind))},
            {"count", data.count},
            {"min_atoms", data.min_atoms},
            {"max_atoms", data.max_atoms},
            {"noise", data.noise}}},
          {"probe",
           {{"mode", std::string(to_string(probe.mode))},
            {"task", std::string(to_string(probe.task))},
            {"label", probe.label},
            {"epochs", probe.epochs},
            {"lr", probe.lr},
            {"batch_size", probe.batch_size}}},
          {"seeds", seeds},
          {"cells", cell_names}};
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cells) {
    rows.push_back({{"cell", c.cell.name()},
                    {"value", c.mean_probe},
                    {"per_seed", c.probe_values},
                    {"final_loss", c.final_losses}});
  }
  return {{"task", "ablation"},
          {"metric", metric},
          {"seeds", seeds},
          {"random_init", random_init},
          {"cells", rows},
          {"config_digest", config_digest}};
}

AblationReport run_ablation(const AblationConfig& config) {
  AblationReport report;
  report.seeds = config.seeds;
  report.config_digest = config_digest(config.to_json());
  report.cells.resize(config.cells.size());
  for (std::size_t c = 0; c < config.cells.size(); ++c) report.cells[c].cell = config.cells[c];

  std::vector<double> random_values;
  for (std::uint64_t seed : config.seeds) {
    SynthSpec spec = config.data;
    spec.seed = seed;
    const Dataset data = gen_synthetic(spec);
    ProbeConfig probe = config.probe;
    probe.seed = seed;

    TrainConfig base = config.train;
    base.seed = seed;
    const ProbeResult random =
        finetune_probe(initial_params(base), base.model, data.records, probe);
    report.metric = random.metric;
    random_values.push_back(random.value);

    for (std::size_t c = 0; c < config.cells.size(); ++c) {
      TrainConfig train = base;
      train.loss.contrastive = config.cells[c].contrastive;
      train.loss.generative = config.cells[c].generative;
      const PretrainResult run = pretrain(data.records, train);
      const ProbeResult r =
          finetune_probe(run.checkpoint.params, train.model, data.records, probe);
      report.cells[c].probe_values.push_back(r.value);
      report.cells[c].final_losses.push_back(tail_mean(run.metrics));
    }
  }
  for (auto& c : report.cells) c.mean_probe = mean_of(c.probe_values);
  report.random_init = mean_of(random_values);
  return report;
}

}  // namespace gmvp
