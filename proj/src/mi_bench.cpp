#include "gmvp/mi_bench.hpp"

#include <algorithm>
#include <cmath>

#include "gmvp/adam.hpp"
#include "gmvp/autodiff.hpp"
#include "gmvp/encoders.hpp"
#include "gmvp/errors.hpp"
#include "gmvp/objectives.hpp"
#include "gmvp/rng.hpp"

namespace gmvp {

namespace {

struct Pairs {
  Tensor x;
  Tensor y;
};

Pairs draw_pairs(const MiBenchConfig& c, Rng& rng) {
  Pairs p{Tensor({c.batch_size, c.dim}), Tensor({c.batch_size, c.dim})};
  const double s = std::sqrt(1.0 - c.rho * c.rho);
  for (std::size_t i = 0; i < c.batch_size * c.dim; ++i) {
    const double x = rng.normal();
    p.x[i] = x;
    p.y[i] = c.rho * x + s * rng.normal();
  }
  return p;
}

BatchReprs encode(Tape& tape, const ParamStore& store, const Pairs& p) {
  return BatchReprs{mlp2(tape, store, "critic.x", tape.constant(p.x)),
                    mlp2(tape, store, "critic.y", tape.constant(p.y))};
}

}  // namespace

void MiBenchConfig::validate() const {
  if (!(std::abs(rho) < 1.0)) throw ConfigError("mi-bench rho must satisfy |rho| < 1");
  if (dim == 0 || hidden == 0 || embed == 0) throw ConfigError("mi-bench sizes must be >= 1");
  if (batch_size < 2) throw ConfigError("mi-bench batch size K must be >= 2");
  if (eval_batches == 0) throw ConfigError("mi-bench eval_batches must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("mi-bench lr must be positive");
}

nlohmann::json MiBenchConfig::to_json() const {
  return {{"rho", rho},       {"dim", dim}, {"batch_size", batch_size}, {"steps", steps},
          {"hidden", hidden}, {"embed", embed}, {"lr", lr},             {"eval_batches", eval_batches}};
}

double gaussian_mi(double rho, std::size_t dim) {
  return -0.5 * static_cast<double>(dim) * std::log(1.0 - rho * rho);
}

MiBenchResult mi_bench(const MiBenchConfig& config, std::uint64_t seed) {
  config.validate();
  const Rng base(seed);
  Rng init = base.fork(1);
  ParamStore store;
  init_mlp2(store, "critic.x", config.dim, config.hidden, config.embed, init);
  init_mlp2(store, "critic.y", config.dim, config.hidden, config.embed, init);
  AdamState adam;
  adam.lr = config.lr;

  MiBenchResult result;
  result.true_mi = gaussian_mi(config.rho, config.dim);
  result.log_k = std::log(static_cast<double>(config.batch_size));
  result.max_train_estimate = -INFINITY;
  Rng data = base.fork(2);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const Pairs p = draw_pairs(config, data);
    Tape tape;
    const BatchReprs batch = encode(tape, store, p);
    const double estimate = mi_estimate_infonce(batch);
    result.train_estimates.push_back(estimate);
    result.max_train_estimate = std::max(result.max_train_estimate, estimate);
    adam_step(store, backward(infonce(batch), tape, store), adam);
  }

  Rng eval = base.fork(3);
  double total = 0.0;
  for (std::size_t b = 0; b < config.eval_batches; ++b) {
    const Pairs p = draw_pairs(config, eval);
    Tape tape(false);
    total += mi_estimate_infonce(encode(tape, store, p));
  }
  result.estimate = total / static_cast<double>(config.eval_batches);
  return result;
}

EvalReport mi_bench_report(const MiBenchConfig& config, const std::vector<std::uint64_t>& seeds) {
  EvalReport report;
  report.task = "mi_bench";
  report.metric = "mi_estimate_infonce";
  report.seeds = seeds;
  report.config_digest = config_digest(config.to_json());
  nlohmann::json max_train = nlohmann::json::array();
  for (std::uint64_t s : seeds) {
    const MiBenchResult r = mi_bench(config, s);
    report.per_seed.push_back(r.estimate);
    max_train.push_back(r.max_train_estimate);
  }
  report.finalize();
  report.extra = {{"true_mi", gaussian_mi(config.rho, config.dim)},
                  {"log_k", std::log(static_cast<double>(config.batch_size))},
                  {"max_train_estimate", max_train},
                  {"config", config.to_json()}};
  return report;
}

}  // namespace gmvp
