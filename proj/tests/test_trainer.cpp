#include <gtest/gtest.h>
#include <zlib.h>

#include <cmath>
#include <filesystem>

#include "gmvp/adam.hpp"
#include "gmvp/checkpoint.hpp"
#include "gmvp/errors.hpp"
#include "gmvp/synth.hpp"
#include "gmvp/trainer.hpp"

using namespace gmvp;

namespace {

// Reference Adam recurrence for one scalar parameter.
struct NaiveAdam {
  double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mh = m / (1.0 - std::pow(b1, t));
    const double vh = v / (1.0 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

std::vector<MoleculeRecord> small_dataset(std::size_t count, std::uint64_t seed = 0) {
  SynthSpec spec;
  spec.count = count;
  spec.min_atoms = 5;
  spec.max_atoms = 10;
  spec.seed = seed;
  return gen_synthetic(spec).records;
}

TrainConfig small_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 2;
  c.model.gin.hidden_dim = c.model.schnet.hidden_dim = 8;
  c.model.schnet.rbf_count = 8;
  return c;
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void reseal(std::vector<std::uint8_t>& b) {
  const std::size_t body = b.size() - 4;
  put_u32(b, body, static_cast<std::uint32_t>(crc32(0L, b.data(), static_cast<uInt>(body))));
}

}  // namespace

TEST(Adam, MatchesNaiveRecurrence) {
  ParamStore p;
  p.add("w", Tensor::matrix({{0.5, -1.0, 2.0}}));
  AdamState st;
  NaiveAdam ref[3];
  double x[3] = {0.5, -1.0, 2.0};
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    Tensor g({1, 3});
    for (double& v : g.data()) v = rng.normal();
    for (int i = 0; i < 3; ++i) x[i] = ref[i].step(x[i], g[i]);
    adam_step(p, {{"w", g}}, st);
    for (int i = 0; i < 3; ++i) ASSERT_NEAR(p.at("w")[i], x[i], 1e-15) << t;
  }
  EXPECT_EQ(st.step, 200u);
}

TEST(Adam, ZeroGradientLeavesParamsAndFirstStepIsLr) {
  ParamStore p;
  p.add("w", Tensor::matrix({{1.0, 2.0}}));
  AdamState st;
  adam_step(p, {{"w", Tensor::zeros({1, 2})}}, st);
  EXPECT_EQ(p.at("w"), Tensor::matrix({{1.0, 2.0}}));

  ParamStore q;
  q.add("w", Tensor::matrix({{1.0, 2.0}}));
  AdamState fresh;
  adam_step(q, {{"w", Tensor::matrix({{3.0, -0.2}})}}, fresh);
  EXPECT_NEAR(q.at("w")(0, 0), 1.0 - 1e-3, 1e-10);
  EXPECT_NEAR(q.at("w")(0, 1), 2.0 + 1e-3, 1e-9);
}

TEST(Adam, RejectsMissingAndNonFiniteGradients) {
  ParamStore p;
  p.add("a", Tensor::matrix({{1.0}}));
  p.add("b", Tensor::matrix({{2.0}}));
  AdamState st;
  EXPECT_THROW(adam_step(p, {{"a", Tensor::matrix({{1.0}})}}, st), ConfigError);
  try {
    adam_step(p, {{"a", Tensor::matrix({{1.0}})}, {"b", Tensor::matrix({{NAN}})}}, st);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_EQ(p.at("a")(0, 0), 1.0);
  EXPECT_EQ(p.at("b")(0, 0), 2.0);
  EXPECT_EQ(st.step, 0u);
}

TEST(StepsPerEpoch, Examples) {
  EXPECT_EQ(steps_per_epoch(10, 4), 3u);
  EXPECT_EQ(steps_per_epoch(9, 4), 2u);
  EXPECT_EQ(steps_per_epoch(8, 4), 2u);
  EXPECT_EQ(steps_per_epoch(2000, 32), 63u);
  EXPECT_EQ(steps_per_epoch(3, 8), 1u);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  const auto data = small_dataset(12);
  TrainConfig c = small_config();
  c.epochs = 1;
  const Checkpoint ck = pretrain(data, c).checkpoint;
  const auto bytes = serialize_checkpoint(ck);
  EXPECT_EQ(deserialize_checkpoint(bytes), ck);
  EXPECT_EQ(serialize_checkpoint(deserialize_checkpoint(bytes)), bytes);

  const auto path = std::filesystem::temp_directory_path() / "gmvp_test_ck.gmvp";
  save_checkpoint(path, ck);
  EXPECT_EQ(load_checkpoint(path), ck);
  std::filesystem::remove(path);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_checkpoint(flipped), FormatError);

  for (std::size_t keep : {std::size_t{0}, std::size_t{7}, bytes.size() - 1}) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(keep));
    EXPECT_THROW(deserialize_checkpoint(cut), FormatError) << keep;
  }

  auto future = bytes;
  put_u32(future, 4, Checkpoint::kFormatVersion + 1);
  reseal(future);
  try {
    deserialize_checkpoint(future);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.gmvp"), FormatError);
}

TEST(Pretrain, DeterministicForSeed) {
  const auto data = small_dataset(20);
  const TrainConfig c = small_config();
  const PretrainResult a = pretrain(data, c);
  const PretrainResult b = pretrain(data, c);
  EXPECT_EQ(a.metrics.to_jsonl(), b.metrics.to_jsonl());
  EXPECT_EQ(a.checkpoint, b.checkpoint);
  EXPECT_EQ(a.metrics.size(), 2 * steps_per_epoch(20, 8));
  for (const auto& r : a.metrics.records()) EXPECT_TRUE(std::isfinite(r.loss));

  TrainConfig other = c;
  other.seed = 1;
  EXPECT_NE(pretrain(data, other).metrics.to_jsonl(), a.metrics.to_jsonl());
}

TEST(Pretrain, ResumeReproducesUnbrokenRun) {
  // 40 records at K = 8 give 5 steps per epoch; 20 epochs = 100 steps, split at 50.
  const auto data = small_dataset(40);
  TrainConfig c = small_config();
  c.epochs = 20;
  const PretrainResult full = pretrain(data, c);
  ASSERT_EQ(full.metrics.size(), 100u);
  for (std::uint64_t cut : {std::uint64_t{50}, std::uint64_t{17}}) {
    PretrainOptions first;
    first.stop_after_step = cut;
    const PretrainResult head = pretrain(data, c, first);
    ASSERT_EQ(head.checkpoint.step, cut);
    const Checkpoint reloaded = deserialize_checkpoint(serialize_checkpoint(head.checkpoint));
    PretrainOptions rest;
    rest.resume = &reloaded;
    const PretrainResult tail = pretrain(data, c, rest);
    ASSERT_EQ(tail.metrics.size(), 100 - cut);
    for (std::uint64_t i = 0; i < tail.metrics.size(); ++i) {
      EXPECT_EQ(tail.metrics.records()[i], full.metrics.records()[cut + i]);
    }
    EXPECT_EQ(tail.metrics.records().front().step, cut + 1);
    EXPECT_EQ(tail.checkpoint, full.checkpoint);
  }
}

TEST(Pretrain, ResumeRejectsDifferentConfig) {
  const auto data = small_dataset(16);
  TrainConfig c = small_config();
  c.epochs = 1;
  const Checkpoint ck = pretrain(data, c).checkpoint;
  TrainConfig other = c;
  other.lr = 2e-3;
  PretrainOptions o;
  o.resume = &ck;
  EXPECT_THROW(pretrain(data, other, o), ConfigError);
}

TEST(Pretrain, SingleMoleculeBatchIsShapeError) {
  const auto data = small_dataset(1);
  try {
    pretrain(data, small_config());
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("K >= 2"), std::string::npos);
  }
  EXPECT_THROW(pretrain({}, small_config()), ConfigError);
}

TEST(Pretrain, DegenerateSettingsRun) {
  const auto data = small_dataset(10);
  TrainConfig c = small_config();
  c.epochs = 1;
  c.mask_ratio = 0.0;
  c.num_conformers = 1;
  c.loss.alpha2 = 0.0;
  const PretrainResult r = pretrain(data, c);
  EXPECT_EQ(r.metrics.size(), steps_per_epoch(10, 8));
  for (const auto& rec : r.metrics.records()) EXPECT_TRUE(std::isfinite(rec.loss));
}

TEST(Pretrain, VariantsRecordTheirTerms) {
  const auto data = small_dataset(10);
  TrainConfig c = small_config();
  c.epochs = 1;
  c.loss.variant = Variant::G;
  EXPECT_TRUE(pretrain(data, c).metrics.records().front().terms.count("attr_mask"));
  c.loss.variant = Variant::C;
  EXPECT_TRUE(pretrain(data, c).metrics.records().front().terms.count("contrastive_2d"));
}

TEST(MetricsLog, StepsStrictlyIncreasing) {
  MetricsLog log;
  log.append({1, 0.5, {}, 0.0});
  EXPECT_THROW(log.append({1, 0.4, {}, 0.0}), Error);
  log.append({2, 0.4, {{"x", 1.0}}, 0.0});
  EXPECT_EQ(log.size(), 2u);
  const std::string text = log.to_jsonl();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}
