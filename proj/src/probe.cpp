#include "gmvp/probe.hpp"

#include <algorithm>
#include <cmath>

#include "gmvp/adam.hpp"
#include "gmvp/autodiff.hpp"
#include "gmvp/errors.hpp"
#include "gmvp/graph_batch.hpp"
#include "gmvp/metrics.hpp"
#include "gmvp/rng.hpp"

namespace gmvp {

namespace {

constexpr const char* kHead = "probe.head";

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split make_split(std::size_t n, double fraction, std::uint64_t seed) {
  if (n < 2) throw DomainError("probe: need at least 2 labelled records, got " + std::to_string(n));
  Rng rng = Rng(seed).fork(0x51);
  std::vector<std::size_t> order = rng.permutation(n);
  auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

// Per-task target encoding and loss.
struct TaskSpec {
  ProbeTask task;
  std::size_t outputs = 1;
  double y_mean = 0.0;  // regression target standardisation
  double y_std = 1.0;

  Var loss(Tape& tape, Var logits, const std::vector<double>& y) const {
    const std::size_t n = y.size();
    switch (task) {
      case ProbeTask::binary: {
        Var t = tape.constant(Tensor({n, 1}, y));
        return mean(softplus(logits) - logits * t);
      }
      case ProbeTask::regression: {
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = (y[i] - y_mean) / y_std;
        return mean(square(logits - tape.constant(Tensor({n, 1}, std::move(z)))));
      }
      case ProbeTask::multiclass: {
        std::vector<std::size_t> cls(n);
        for (std::size_t i = 0; i < n; ++i) cls[i] = static_cast<std::size_t>(y[i]);
        return mean(logsumexp(logits, Axis::cols) - pick_columns(logits, cls));
      }
    }
    throw ConfigError("probe: unknown task");
  }

  double metric(const Tensor& logits, const std::vector<double>& y) const {
    const std::size_t n = y.size();
    switch (task) {
      case ProbeTask::binary: {
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = y[i] != 0.0 ? 1 : 0;
        return roc_auc(logits.data(), labels);
      }
      case ProbeTask::regression: {
        std::vector<double> pred(n);
        for (std::size_t i = 0; i < n; ++i) pred[i] = logits[i] * y_std + y_mean;
        return rmse(pred, y);
      }
      case ProbeTask::multiclass: {
        std::vector<std::size_t> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto row = logits.row(i);
          pred[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
          truth[i] = static_cast<std::size_t>(y[i]);
        }
        return accuracy(pred, truth);
      }
    }
    throw ConfigError("probe: unknown task");
  }
};

const char* metric_name(ProbeTask t) {
  switch (t) {
    case ProbeTask::binary: return "roc_auc";
    case ProbeTask::regression: return "rmse";
    case ProbeTask::multiclass: return "accuracy";
  }
  return "";
}

TaskSpec make_task(ProbeTask task, const std::vector<double>& labels, const Split& split) {
  TaskSpec spec{task};
  if (task == ProbeTask::binary) {
    bool pos = false, neg = false;
    for (double v : labels) {
      if (v != 0.0 && v != 1.0) throw DomainError("probe: binary labels must be 0 or 1");
    }
    for (std::size_t i : split.train) (labels[i] != 0.0 ? pos : neg) = true;
    if (!pos || !neg) throw DomainError("probe: training split contains a single class");
  } else if (task == ProbeTask::multiclass) {
    double top = 0.0;
    for (double v : labels) {
      if (v < 0.0 || v != std::floor(v)) {
        throw DomainError("probe: class labels must be non-negative integers");
      }
      top = std::max(top, v);
    }
    spec.outputs = static_cast<std::size_t>(top) + 1;
    if (spec.outputs < 2) throw DomainError("probe: multiclass task needs at least 2 classes");
  } else {
    double s = 0.0, ss = 0.0;
    for (std::size_t i : split.train) s += labels[i];
    spec.y_mean = s / static_cast<double>(split.train.size());
    for (std::size_t i : split.train) ss += (labels[i] - spec.y_mean) * (labels[i] - spec.y_mean);
    const double sd = std::sqrt(ss / static_cast<double>(split.train.size()));
    spec.y_std = sd > 1e-12 ? sd : 1.0;
  }
  return spec;
}

std::vector<double> pick(const std::vector<double>& v, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

Tensor pick_rows(const Tensor& t, std::span<const std::size_t> idx) {
  Tensor out({idx.size(), t.cols()});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = t.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

ParamStore make_head(std::size_t in, std::size_t out) {
  ParamStore head;
  head.add(std::string(kHead) + ".w", Tensor::zeros({in, out}));
  head.add_bias(std::string(kHead) + ".b", out);
  return head;
}

Tensor evaluate_head(const ParamStore& head, const Tensor& x) {
  Tape tape(false);
  return linear(tape, head, kHead, tape.constant(x)).value();
}

std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<std::size_t>& train,
                                                    std::size_t batch_size, Rng rng) {
  std::vector<std::size_t> order = train;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<double> collect_labels(const std::vector<MoleculeRecord>& records, const std::string& name) {
  std::vector<double> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(record_label(r, name));
  return y;
}

}  // namespace

std::string_view to_string(ProbeMode m) {
  return m == ProbeMode::frozen_linear_probe ? "frozen_linear_probe" : "full_finetune";
}

std::string_view to_string(ProbeTask t) {
  switch (t) {
    case ProbeTask::binary: return "binary";
    case ProbeTask::regression: return "regression";
    case ProbeTask::multiclass: return "multiclass";
  }
  return "";
}

ProbeMode parse_probe_mode(std::string_view s) {
  if (s == "frozen" || s == "frozen_linear_probe") return ProbeMode::frozen_linear_probe;
  if (s == "full" || s == "full_finetune") return ProbeMode::full_finetune;
  throw ConfigError("unknown probe mode '" + std::string(s) + "'");
}

ProbeTask parse_probe_task(std::string_view s) {
  if (s == "binary") return ProbeTask::binary;
  if (s == "regression") return ProbeTask::regression;
  if (s == "multiclass") return ProbeTask::multiclass;
  throw ConfigError("unknown probe task '" + std::string(s) + "'");
}

void ProbeConfig::validate() const {
  if (epochs == 0) throw ConfigError("probe epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("probe batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("probe lr must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("probe train_fraction must lie in (0, 1)");
  }
}

double record_label(const MoleculeRecord& record, const std::string& name) {
  if (name.empty() || name == "label") {
    if (!record.label) throw DomainError("record '" + record.id + "' has no label");
    return *record.label;
  }
  const auto it = record.labels.find(name);
  if (it == record.labels.end()) {
    throw DomainError("record '" + record.id + "' has no label '" + name + "'");
  }
  return it->second;
}

Tensor encode_2d(const ParamStore& params, const GinConfig& config,
                 const std::vector<MoleculeRecord>& records, std::size_t batch_size) {
  Tensor out({records.size(), config.hidden_dim});
  for (std::size_t begin = 0; begin < records.size(); begin += batch_size) {
    const std::size_t end = std::min(records.size(), begin + batch_size);
    std::vector<const Molecule2D*> graphs;
    for (std::size_t i = begin; i < end; ++i) graphs.push_back(&records[i].graph);
    Tape tape(false);
    const Tensor h = gin_forward(tape, params, config, GraphBatch::build(graphs)).graph_reprs.value();
    std::copy(h.data().begin(), h.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(begin * config.hidden_dim));
  }
  return out;
}

ProbeResult linear_probe(const Tensor& features, const std::vector<double>& labels,
                         const ProbeConfig& config) {
  config.validate();
  if (features.rows() != labels.size()) throw ShapeError("probe: one label per feature row required");
  const Split split = make_split(labels.size(), config.train_fraction, config.seed);
  const TaskSpec task = make_task(config.task, labels, split);

  // Standardise with training statistics.
  const std::size_t d = features.cols();
  Tensor x = features;
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0, ss = 0.0;
    for (std::size_t i : split.train) s += features(i, c);
    const double mu = s / static_cast<double>(split.train.size());
    for (std::size_t i : split.train) ss += (features(i, c) - mu) * (features(i, c) - mu);
    double sd = std::sqrt(ss / static_cast<double>(split.train.size()));
    if (sd < 1e-12) sd = 1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) x(i, c) = (features(i, c) - mu) / sd;
  }

  ProbeResult result;
  result.metric = metric_name(config.task);
  result.head = make_head(d, task.outputs);
  AdamState adam;
  adam.lr = config.lr;
  const Rng base(config.seed);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& batch : epoch_batches(split.train, config.batch_size, base.fork(epoch))) {
      Tape tape;
      Var logits = linear(tape, result.head, kHead, tape.constant(pick_rows(x, batch)));
      Var loss = task.loss(tape, logits, pick(labels, batch));
      adam_step(result.head, backward(loss, tape, result.head), adam);
    }
  }
  result.train_value = task.metric(evaluate_head(result.head, pick_rows(x, split.train)),
                                   pick(labels, split.train));
  result.value = task.metric(evaluate_head(result.head, pick_rows(x, split.test)),
                             pick(labels, split.test));
  result.test_indices = split.test;
  return result;
}

ProbeResult finetune_probe(const ParamStore& params, const ModelConfig& model,
                           const std::vector<MoleculeRecord>& records, const ProbeConfig& config) {
  config.validate();
  model.validate();
  const std::vector<double> labels = collect_labels(records, config.label);

  if (config.mode == ProbeMode::frozen_linear_probe) {
    ProbeResult result = linear_probe(encode_2d(params, model.gin, records), labels, config);
    result.encoder.copy_prefix_from(params, "gin.");
    return result;
  }

  const Split split = make_split(records.size(), config.train_fraction, config.seed);
  const TaskSpec task = make_task(config.task, labels, split);
  const std::size_t d = model.gin.hidden_dim;

  // One store holding the encoder and the head so a single Adam state drives both.
  ParamStore store = make_head(d, task.outputs);
  store.copy_prefix_from(params, "gin.");
  AdamState adam;
  adam.lr = config.lr;
  const Rng base(config.seed);
  auto forward = [&](Tape& tape, std::span<const std::size_t> idx) {
    std::vector<const Molecule2D*> graphs;
    for (std::size_t i : idx) graphs.push_back(&records[i].graph);
    Var h = gin_forward(tape, store, model.gin, GraphBatch::build(graphs)).graph_reprs;
    return linear(tape, store, kHead, h);
  };
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& batch : epoch_batches(split.train, config.batch_size, base.fork(epoch))) {
      Tape tape;
      Var loss = task.loss(tape, forward(tape, batch), pick(labels, batch));
      adam_step(store, backward(loss, tape, store), adam);
    }
  }

  ProbeResult result;
  result.metric = metric_name(config.task);
  auto score = [&](const std::vector<std::size_t>& idx) {
    Tape tape(false);
    return task.metric(forward(tape, idx).value(), pick(labels, idx));
  };
  result.train_value = score(split.train);
  result.value = score(split.test);
  result.head.copy_prefix_from(store, std::string(kHead) + ".");
  result.encoder.copy_prefix_from(store, "gin.");
  result.test_indices = split.test;
  return result;
}

}  // namespace gmvp
