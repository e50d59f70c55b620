#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gmvp/autodiff.hpp"
#include "gmvp/errors.hpp"
#include "gmvp/grad_check.hpp"
#include "gmvp/param_store.hpp"
#include "gmvp/rng.hpp"

using namespace gmvp;

namespace {

Tensor random_tensor(Rng& rng, Tensor::Shape shape, double lo = -1.5, double hi = 1.5) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

Tensor grad_of(Tape& tape, Var loss, Var x) {
  tape.run_backward(loss);
  const Tensor* g = tape.grad(x);
  return g != nullptr ? *g : Tensor::zeros_like(x.value());
}

Var leaf(Tape& tape, Tensor t) {
  t.requires_grad = true;
  return tape.leaf(std::move(t));
}

}  // namespace

TEST(Tensor, ShapeInvariants) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(Tensor::vector({1, 2}).rows(), 1u);
  EXPECT_EQ(Tensor::scalar(3).item(), 3.0);
  EXPECT_EQ(shape_size({2, 3, 4}), 24u);
}

TEST(Elementwise, Examples) {
  Tape tape;
  EXPECT_DOUBLE_EQ(sigmoid(tape.constant(Tensor::vector({0.0}))).value()[0], 0.5);
  const Tensor a = Tensor::matrix({{1.5, -2}, {0.25, 7}});
  EXPECT_EQ(add(tape.constant(a), tape.constant(Tensor::zeros_like(a))).value(), a);
  const Tensor r = relu(tape.constant(Tensor::vector({-1.5, 0.0, 2.0}))).value();
  EXPECT_EQ(r, Tensor::vector({0.0, 0.0, 2.0}));
}

TEST(Elementwise, BroadcastTrailingOne) {
  Tape tape;
  const Var a = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  EXPECT_EQ((a + tape.constant(Tensor::matrix({{10}, {20}}))).value(),
            Tensor::matrix({{11, 12}, {23, 24}}));
  EXPECT_EQ((a * tape.constant(Tensor::vector({2, 3}))).value(), Tensor::matrix({{2, 6}, {6, 12}}));
  EXPECT_THROW(a + tape.constant(Tensor::matrix({{1, 2, 3}})), ShapeError);
}

TEST(Elementwise, DomainAndNumericErrors) {
  Tape tape;
  EXPECT_THROW(log(tape.constant(Tensor::vector({1.0, 0.0}))), DomainError);
  EXPECT_THROW(log(tape.constant(Tensor::vector({-1.0}))), DomainError);
  try {
    exp(tape.constant(Tensor::vector({1000.0})));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("exp"), std::string::npos);
  }
  EXPECT_THROW(tape.constant(Tensor::vector({std::numeric_limits<double>::quiet_NaN()})),
               NumericError);
}

TEST(Matmul, Examples) {
  Tape tape;
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
  EXPECT_EQ(matmul(tape.constant(a), tape.constant(b)).value(), Tensor::matrix({{19, 22}, {43, 50}}));
  EXPECT_EQ(matmul(tape.constant(Tensor::matrix({{1, 0}, {0, 1}})), tape.constant(a)).value(), a);
  EXPECT_EQ(matmul(tape.constant(a), tape.constant(Tensor::zeros({2, 2}))).value(),
            Tensor::zeros({2, 2}));
  EXPECT_THROW(matmul(tape.constant(a), tape.constant(Tensor::zeros({3, 2}))), ShapeError);
}

TEST(Matmul, MatchesNaiveOnRandomShapes) {
  Rng rng(5);
  Tape tape;
  for (std::size_t m : {1, 3, 6}) {
    for (std::size_t k : {1, 4, 9}) {
      for (std::size_t n : {1, 2, 7}) {
        const Tensor a = random_tensor(rng, {m, k}), b = random_tensor(rng, {k, n});
        const Tensor c = matmul(tape.constant(a), tape.constant(b)).value();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a(i, p) * b(p, j);
            EXPECT_NEAR(c(i, j), s, 1e-12);
          }
        }
      }
    }
  }
}

TEST(GatherScatter, Examples) {
  Tape tape;
  const std::vector<std::size_t> idx{0, 0, 1};
  EXPECT_EQ(scatter_add_rows(tape.constant(Tensor::matrix({{1}, {2}, {3}})), idx, 2).value(),
            Tensor::matrix({{3}, {3}}));
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> ident{0, 1, 2};
  EXPECT_EQ(gather_rows(tape.constant(a), ident).value(), a);
  const std::vector<std::size_t> distinct{3, 0};
  EXPECT_EQ(scatter_add_rows(tape.constant(Tensor::matrix({{1, 2}, {3, 4}})), distinct, 4).value(),
            Tensor::matrix({{3, 4}, {0, 0}, {0, 0}, {1, 2}}));
  const std::vector<std::size_t> bad{0, 3};
  EXPECT_THROW(gather_rows(tape.constant(a), bad), IndexError);
  EXPECT_THROW(scatter_add_rows(tape.constant(Tensor::matrix({{1}, {2}})), bad, 3), IndexError);
}

TEST(GatherScatter, PermutationRoundTripIsExact) {
  Rng rng(9);
  Tape tape;
  const Tensor a = random_tensor(rng, {7, 3});
  const auto perm = rng.permutation(7);
  const Var g = gather_rows(tape.constant(a), perm);
  EXPECT_EQ(scatter_add_rows(g, perm, 7).value(), a);
}

TEST(Reduce, Examples) {
  Tape tape;
  EXPECT_DOUBLE_EQ(mean(tape.constant(Tensor::vector({2, 4, 6}))).value().item(), 4.0);
  EXPECT_NEAR(logsumexp(tape.constant(Tensor::vector({0, 0}))).value().item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(logsumexp(tape.constant(Tensor::vector({1000, 1000}))).value().item(),
              1000.0 + std::log(2.0), 1e-12);
  const Var m = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  EXPECT_EQ(sum(m, Axis::rows).value(), Tensor::matrix({{4, 6}}));
  EXPECT_EQ(sum(m, Axis::cols).value(), Tensor::matrix({{3}, {7}}));
  EXPECT_THROW(sum(tape.constant(Tensor::zeros({0, 3})), Axis::cols), ShapeError);
}

TEST(Reduce, LogsumexpShiftInvariance) {
  Rng rng(11);
  Tape tape;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor(rng, {1, 6}, -5, 5);
    const double c = rng.uniform(-50, 50);
    Tensor xc = x;
    for (double& v : xc.data()) v += c;
    EXPECT_NEAR(logsumexp(tape.constant(xc)).value().item(),
                logsumexp(tape.constant(x)).value().item() + c, 1e-12);
  }
}

TEST(Backward, Examples) {
  {
    Tape tape;
    const Var x = leaf(tape, Tensor::scalar(3.0));
    EXPECT_DOUBLE_EQ(grad_of(tape, square(x), x).item(), 6.0);
  }
  {
    Tape tape;
    const Var x = leaf(tape, Tensor::zeros({1, 4}));
    const Tensor g = grad_of(tape, sum(sigmoid(x)), x);
    for (double v : g.data()) EXPECT_DOUBLE_EQ(v, 0.25);
  }
}

TEST(Backward, RejectsNonScalarLoss) {
  Tape tape;
  const Var x = leaf(tape, Tensor::zeros({2, 2}));
  EXPECT_THROW(tape.run_backward(x * x), ShapeError);
}

TEST(Backward, UnreachableParamsGetExactZerosAndTapeIsCleared) {
  Rng rng(1);
  ParamStore store;
  store.add_weight("a", 2, 2, rng);
  store.add_weight("b", 2, 2, rng);
  Tape tape;
  const Var loss = sum(square(tape.param(store, "a")));
  const auto grads = backward(loss, tape, store);
  EXPECT_EQ(grads.at("b"), Tensor::zeros({2, 2}));
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Backward, EachNodeVisitedOnce) {
  Tape tape;
  const Var x = leaf(tape, Tensor::scalar(2.0));
  Var y = x;
  for (int i = 0; i < 10; ++i) y = y * x + y;  // heavy fan-out onto earlier nodes
  const std::size_t nodes = tape.size();
  tape.run_backward(y);
  EXPECT_EQ(tape.last_backward_visits(), nodes);
}

TEST(Backward, StopGradientBlocksFlow) {
  Tape tape;
  const Var x = leaf(tape, Tensor::scalar(2.0));
  const Var loss = x * stop_gradient(x);
  EXPECT_DOUBLE_EQ(grad_of(tape, loss, x).item(), 2.0);
}

// Finite-difference checks of every primitive on random small tensors.
TEST(Backward, PrimitivesMatchFiniteDifferences) {
  Rng rng(21);
  using Op = std::function<Var(Tape&, const ParamStore&)>;
  auto p = [](Tape& t, const ParamStore& s, const char* n) { return t.param(s, n); };
  const std::vector<std::pair<std::string, Op>> ops{
      {"add", [&](Tape& t, const ParamStore& s) { return sum(square(p(t, s, "a") + p(t, s, "col"))); }},
      {"sub", [&](Tape& t, const ParamStore& s) { return sum(square(p(t, s, "a") - p(t, s, "row"))); }},
      {"mul", [&](Tape& t, const ParamStore& s) { return sum(p(t, s, "a") * p(t, s, "b")); }},
      {"relu", [&](Tape& t, const ParamStore& s) { return sum(square(relu(p(t, s, "a")))); }},
      {"sigmoid", [&](Tape& t, const ParamStore& s) { return sum(sigmoid(p(t, s, "a"))); }},
      {"exp", [&](Tape& t, const ParamStore& s) { return sum(exp(p(t, s, "a"))); }},
      {"log", [&](Tape& t, const ParamStore& s) { return sum(log(p(t, s, "pos"))); }},
      {"softplus", [&](Tape& t, const ParamStore& s) { return sum(softplus(p(t, s, "a"))); }},
      {"square", [&](Tape& t, const ParamStore& s) { return sum(square(p(t, s, "a"))); }},
      {"matmul", [&](Tape& t, const ParamStore& s) { return sum(square(matmul(p(t, s, "a"), p(t, s, "c")))); }},
      {"transpose", [&](Tape& t, const ParamStore& s) { return sum(transpose(p(t, s, "a")) * p(t, s, "c")); }},
      {"gather", [&](Tape& t, const ParamStore& s) {
         static const std::vector<std::size_t> idx{2, 0, 2, 1};
         return sum(square(gather_rows(p(t, s, "a"), idx)));
       }},
      {"scatter", [&](Tape& t, const ParamStore& s) {
         static const std::vector<std::size_t> idx{1, 1, 0};
         return sum(square(scatter_add_rows(p(t, s, "a"), idx, 2)));
       }},
      {"mean_rows", [&](Tape& t, const ParamStore& s) { return sum(square(mean(p(t, s, "a"), Axis::rows))); }},
      {"sum_cols", [&](Tape& t, const ParamStore& s) { return sum(square(sum(p(t, s, "a"), Axis::cols))); }},
      {"lse_cols", [&](Tape& t, const ParamStore& s) { return sum(square(logsumexp(p(t, s, "a"), Axis::cols))); }},
      {"lse_all", [&](Tape& t, const ParamStore& s) { return logsumexp(p(t, s, "a")); }},
      {"pick", [&](Tape& t, const ParamStore& s) {
         static const std::vector<std::size_t> idx{1, 0, 1};
         return sum(square(pick_columns(p(t, s, "a"), idx)));
       }},
  };
  for (int trial = 0; trial < 6; ++trial) {
    ParamStore store;
    store.add("a", random_tensor(rng, {3, 2}));
    store.add("b", random_tensor(rng, {3, 2}));
    store.add("c", random_tensor(rng, {2, 3}));
    store.add("col", random_tensor(rng, {3, 1}));
    store.add("row", random_tensor(rng, {1, 2}));
    store.add("pos", random_tensor(rng, {3, 2}, 0.5, 2.0));
    for (const auto& [name, f] : ops) {
      const auto r = grad_check(f, store);
      EXPECT_LT(r.max_rel_error, 1e-6) << name << " at " << r.worst_param << "[" << r.worst_index << "]";
    }
  }
}

TEST(GradCheck, QuadraticFormAndMlp) {
  Rng rng(4);
  ParamStore store;
  store.add("x", random_tensor(rng, {1, 4}));
  store.add("A", random_tensor(rng, {4, 4}));
  const auto quad = grad_check(
      [](Tape& t, const ParamStore& s) {
        const Var x = t.param(s, "x");
        return sum(matmul(x, t.param(s, "A")) * x);
      },
      store);
  EXPECT_LT(quad.max_rel_error, 1e-9);

  ParamStore mlp;
  mlp.add_weight("w1", 3, 5, rng);
  mlp.add_bias("b1", 5);
  mlp.add_weight("w2", 5, 1, rng);
  for (double& v : mlp.at("b1").data()) v = rng.uniform(-0.5, 0.5);
  const Tensor input = random_tensor(rng, {6, 3});
  const auto r = grad_check(
      [&](Tape& t, const ParamStore& s) {
        const Var h = relu(matmul(t.constant(input), t.param(s, "w1")) + t.param(s, "b1"));
        return mean(square(matmul(h, t.param(s, "w2"))));
      },
      mlp);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, StopGradientTargetsHeldFixed) {
  ParamStore store;
  store.add("x", Tensor::vector({0.3, -0.7}));
  const auto r = grad_check(
      [](Tape& t, const ParamStore& s) {
        const Var x = t.param(s, "x");
        return sum(square(x - stop_gradient(x * x)));
      },
      store);
  EXPECT_LT(r.max_rel_error, 1e-9);
}
