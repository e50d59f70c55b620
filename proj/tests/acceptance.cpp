// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fail. Pass criterion numbers as arguments to run a subset.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "gmvp/ablation.hpp"
#include "gmvp/checkpoint.hpp"
#include "gmvp/encoders.hpp"
#include "gmvp/loss_check.hpp"
#include "gmvp/mi_bench.hpp"
#include "gmvp/objectives.hpp"
#include "gmvp/probe.hpp"
#include "gmvp/synth.hpp"
#include "gmvp/trainer.hpp"

using namespace gmvp;
namespace fs = std::filesystem;

namespace {

// Pre-training budget for the transfer check.
constexpr std::size_t kTransferRecords = 2000;
constexpr std::size_t kTransferEpochs = 200;
constexpr double kTransferLr = 1e-3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("gmvp_acceptance_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Outcome gradient_correctness() {
  struct Case {
    const char* name;
    Variant variant;
  };
  const Case cases[] = {{"infonce", Variant::plain}, {"ebm_nce", Variant::plain}, {"vrr", Variant::plain},
                        {"rr", Variant::plain},      {"attr_mask", Variant::G},    {"combined", Variant::G},
                        {"combined", Variant::C}};
  const auto start = std::chrono::steady_clock::now();
  Outcome out{true, ""};
  double worst = 0.0;
  for (const Case& c : cases) {
    const GradCheckResult r = check_loss_gradients(c.name, c.variant, 0);
    worst = std::max(worst, r.max_rel_error);
    if (!(r.max_rel_error < 1e-4)) {
      out.pass = false;
      out.detail += std::string(c.name) + "(" + std::string(to_string(c.variant)) + ")=" +
                    fmt("%.3g ", r.max_rel_error);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= 120.0) out.pass = false;
  out.detail += "worst rel error " + fmt("%.3g", worst) + ", " + fmt("%.1f s", secs);
  return out;
}

Outcome closed_form_losses() {
  Tape tape;
  const Tensor zeros = Tensor::zeros({2, 4});
  const BatchReprs b{tape.constant(zeros), tape.constant(zeros)};
  const std::vector<std::size_t> swap{1, 0};
  const double inf = infonce(b).value().item();
  const double ebm = ebm_nce(b, swap, swap).value().item();
  const double kl = kl_diag_gaussian(tape.constant(Tensor::matrix({{1.0}})), tape.constant(Tensor::matrix({{1.0}})))
                        .value()
                        .item();
  const bool pass = std::abs(inf - std::log(2.0)) <= 1e-9 && std::abs(ebm - 2.0 * std::log(2.0)) <= 1e-9 &&
                    std::abs(kl - 0.5) <= 1e-12;
  return {pass, "infonce " + fmt("%.15f", inf) + ", ebm_nce " + fmt("%.15f", ebm) + ", kl " + fmt("%.15f", kl)};
}

// Uniform random orthogonal matrix (rotation or reflection) by Gram-Schmidt.
std::array<Vec3, 3> random_orthogonal(Rng& rng) {
  std::array<Vec3, 3> q{};
  for (int i = 0; i < 3; ++i) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    for (int j = 0; j < i; ++j) {
      const double d = v[0] * q[j][0] + v[1] * q[j][1] + v[2] * q[j][2];
      for (int k = 0; k < 3; ++k) v[k] -= d * q[j][k];
    }
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (int k = 0; k < 3; ++k) q[i][k] = v[k] / n;
  }
  return q;
}

Outcome geometric_invariance() {
  const auto start = std::chrono::steady_clock::now();
  SynthSpec spec;
  spec.count = 4;
  spec.seed = 11;
  const Dataset ds = gen_synthetic(spec);
  ModelConfig m;
  Rng rng(12);
  const ParamStore s = init_model(m, rng);
  double worst3d = 0.0, worst2d = 0.0;
  for (const auto& rec : ds.records) {
    Tape base;
    const Tensor ref3d = schnet_forward(base, s, m.schnet, rec.graph.atoms, rec.conformers[0]).value();
    const Tensor ref2d = gin_forward(base, s, m.gin, rec.graph).graph_reprs.value();
    for (int t = 0; t < 100; ++t) {
      const auto q = random_orthogonal(rng);
      const Vec3 shift{10 * rng.normal(), 10 * rng.normal(), 10 * rng.normal()};
      Conformer moved = rec.conformers[0];
      for (auto& p : moved.coords) {
        Vec3 r{};
        for (int i = 0; i < 3; ++i) r[i] = q[i][0] * p[0] + q[i][1] * p[1] + q[i][2] * p[2] + shift[i];
        p = r;
      }
      Tape t3;
      worst3d = std::max(worst3d, max_abs_diff(ref3d, schnet_forward(t3, s, m.schnet, rec.graph.atoms, moved).value()));

      const auto perm = rng.permutation(rec.graph.size());
      Molecule2D p;
      p.atoms.resize(rec.graph.size());
      for (std::size_t i = 0; i < perm.size(); ++i) p.atoms[perm[i]] = rec.graph.atoms[i];
      for (const Bond& b : rec.graph.bonds) {
        p.bonds.push_back(Bond{std::min(perm[b.i], perm[b.j]), std::max(perm[b.i], perm[b.j]), b.type});
      }
      Tape t2;
      worst2d = std::max(worst2d, max_abs_diff(ref2d, gin_forward(t2, s, m.gin, p).graph_reprs.value()));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = worst3d < 1e-9 && worst2d < 1e-6 && secs < 60.0;
  return {pass, "schnet sup-norm " + fmt("%.3g", worst3d) + ", gin sup-norm " + fmt("%.3g", worst2d) + ", " +
                    fmt("%.1f s", secs)};
}

Outcome mi_benchmark() {
  const auto start = std::chrono::steady_clock::now();
  MiBenchConfig c;  // rho 0.8, 1-D, K = 128, 2000 steps
  Outcome out{true, ""};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const MiBenchResult r = mi_bench(c, seed);
    const bool ok = r.estimate >= 0.30 && r.estimate <= 0.53 && r.max_train_estimate <= r.log_k;
    out.pass = out.pass && ok;
    out.detail += "seed " + std::to_string(seed) + " " + fmt("%.4f", r.estimate) + (ok ? "" : "!") + ", ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= 180.0) out.pass = false;
  out.detail += "true " + fmt("%.4f", gaussian_mi(c.rho, c.dim)) + ", " + fmt("%.1f s", secs);
  return out;
}

double tail_mean(const std::vector<MetricsRecord>& r, bool head) {
  const std::size_t n = std::max<std::size_t>(1, r.size() / 10);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += r[head ? i : r.size() - n + i].loss;
  return acc / static_cast<double>(n);
}

Outcome training_sanity() {
  const auto start = std::chrono::steady_clock::now();
  Outcome out{true, ""};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthSpec spec;
    spec.count = 2000;
    spec.seed = seed;
    TrainConfig c;  // M = 0.15, C = 5, 5 epochs
    c.seed = seed;
    const PretrainResult r = pretrain(gen_synthetic(spec).records, c);
    const double first = tail_mean(r.metrics.records(), true);
    const double last = tail_mean(r.metrics.records(), false);
    out.pass = out.pass && last < first;
    out.detail += "seed " + std::to_string(seed) + " " + fmt("%.3f", first) + " -> " + fmt("%.3f", last) + ", ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= 600.0) out.pass = false;
  out.detail += fmt("%.1f s", secs);
  return out;
}

Outcome transfer_property() {
  const auto start = std::chrono::steady_clock::now();
  double gain = 0.0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthSpec spec;
    spec.count = kTransferRecords;
    spec.seed = seed;
    const Dataset ds = gen_synthetic(spec);
    TrainConfig c;
    c.seed = seed;
    c.epochs = kTransferEpochs;
    c.lr = kTransferLr;
    ProbeConfig probe;
    probe.task = ProbeTask::multiclass;
    probe.label = "diameter_class";
    probe.seed = seed;
    const double random = finetune_probe(initial_params(c), c.model, ds.records, probe).value;
    const ParamStore trained = pretrain(ds.records, c).checkpoint.params;
    const double pre = finetune_probe(trained, c.model, ds.records, probe).value;
    gain += (pre - random) / 3.0;
    detail += "seed " + std::to_string(seed) + " " + fmt("%.3f", random) + " -> " + fmt("%.3f", pre) + ", ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = gain >= 0.05 && secs < 900.0;
  return {pass, detail + "mean gain " + fmt("%.1f", 100.0 * gain) + " points, " + fmt("%.1f s", secs)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GMVP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome ablation_machinery() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = scratch_dir("ablation");
  const int a = run_cli("ablation --out " + (dir / "a").string());
  const int b = run_cli("ablation --out " + (dir / "b").string());
  if (a != 0 || b != 0) return {false, "ablation exited with " + std::to_string(a) + "/" + std::to_string(b)};
  const std::string ja = slurp(dir / "a" / "ablation.json");
  const bool identical = ja == slurp(dir / "b" / "ablation.json");
  const auto report = nlohmann::json::parse(ja);
  const auto& cells = report.at("cells");
  bool finite = true;
  std::string values;
  for (const auto& c : cells) {
    const double v = c.at("value").get<double>();
    finite = finite && std::isfinite(v);
    values += c.at("cell").get<std::string>() + "=" + fmt("%.3f", v) + " ";
  }
  fs::remove_all(dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = identical && finite && cells.size() == default_ablation_cells().size();
  return {pass, std::to_string(cells.size()) + " cells, " + (identical ? "identical" : "DIFFERENT") +
                    " reports, " + values + fmt("(%.1f s)", secs)};
}

Outcome determinism_and_persistence() {
  const fs::path dir = scratch_dir("persist");
  SynthSpec spec;
  spec.count = 200;
  spec.seed = 21;
  const auto data = gen_synthetic(spec).records;
  TrainConfig c;
  c.seed = 21;
  c.epochs = 3;
  const PretrainResult full = pretrain(data, c);
  full.metrics.write(dir / "a.jsonl");
  pretrain(data, c).metrics.write(dir / "b.jsonl");
  const bool same_bytes = slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl");

  const std::uint64_t total = full.metrics.size();
  PretrainOptions head;
  head.stop_after_step = total / 2;
  save_checkpoint(dir / "half.gmvp", pretrain(data, c, head).checkpoint);
  const Checkpoint loaded = load_checkpoint(dir / "half.gmvp");
  PretrainOptions rest;
  rest.resume = &loaded;
  const PretrainResult tail = pretrain(data, c, rest);
  bool resumed = tail.metrics.size() == total - total / 2;
  for (std::size_t i = 0; resumed && i < tail.metrics.size(); ++i) {
    resumed = tail.metrics.records()[i] == full.metrics.records()[total / 2 + i];
  }
  resumed = resumed && tail.checkpoint == full.checkpoint;
  fs::remove_all(dir);
  return {same_bytes && resumed, std::string("metrics files ") + (same_bytes ? "identical" : "DIFFER") +
                                     ", resume from step " + std::to_string(total / 2) + " of " +
                                     std::to_string(total) + (resumed ? " exact" : " DIVERGED")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"closed-form loss values", closed_form_losses},
      {"geometric invariance", geometric_invariance},
      {"MI benchmark", mi_benchmark},
      {"training sanity", training_sanity},
      {"transfer property", transfer_property},
      {"ablation machinery", ablation_machinery},
      {"determinism and persistence", determinism_and_persistence},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d (%s): %s  %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
