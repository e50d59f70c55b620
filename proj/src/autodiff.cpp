#include "gmvp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gmvp/errors.hpp"
#include "gmvp/kernels.hpp"

namespace gmvp {

const Tensor& Var::value() const { return tape->value(*this); }

// ---- Tape ------------------------------------------------------------------

Var Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw NumericError("non-finite value produced by op '" + std::string(node.op) + "'");
  }
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  n.value.requires_grad = false;
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.op = "leaf";
  n.requires_grad = recording_ && value.requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  if (auto it = param_ids_.find(name); it != param_ids_.end()) return Var{this, it->second};
  Node n;
  n.op = "param";
  n.value = store.at(name);
  n.requires_grad = recording_;
  n.param_name = name;
  Var v = push(std::move(n));
  param_ids_.emplace(name, v.id);
  return v;
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (Var in : inputs) {
    if (in.tape != this) throw Error("op '" + std::string(op) + "' mixes tapes");
    n.inputs.push_back(in.id);
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  n.requires_grad = n.requires_grad && recording_;
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor* Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  return n.has_grad ? &n.grad : nullptr;
}

void Tape::run_backward(Var loss) {
  if (loss.tape != this) throw Error("backward: loss was not produced by this tape");
  if (value(loss).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_string(value(loss).shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  visits_ = 0;
  grad_buffer(loss).fill(1.0);
  for (std::int64_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad) continue;
    ++visits_;
    if (!n.backward) continue;
    n.backward(*this, n.grad);
    for (std::uint32_t in : n.inputs) {
      const Node& src = nodes_[in];
      if (src.has_grad && !src.grad.all_finite()) {
        throw NumericError("non-finite gradient produced by backward of op '" +
                           std::string(n.op) + "'");
      }
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  param_ids_.clear();
}

std::map<std::string, Tensor> backward(Var loss, Tape& tape, const ParamStore& params) {
  tape.run_backward(loss);
  std::map<std::string, Tensor> grads;
  for (const auto& [name, value] : params) {
    auto it = tape.param_ids_.find(name);
    const Tensor* g = it == tape.param_ids_.end() ? nullptr : tape.grad(Var{&tape, it->second});
    grads.emplace(name, g != nullptr ? *g : Tensor::zeros_like(value));
  }
  tape.clear();
  return grads;
}

// ---- helpers ---------------------------------------------------------------

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw Error("op on a default-constructed Var");
  return *a.tape;
}

// Row/column broadcast plan for two operands of rank <= 2.
struct Plan {
  std::size_t rows = 1, cols = 1;
  Tensor::Shape out_shape;
  std::size_t a_rs = 0, a_cs = 0, b_rs = 0, b_cs = 0;
  bool same = false;
};

Plan broadcast_plan(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.rank() > 2 || b.rank() > 2) throw ShapeError(std::string(op) + ": rank > 2");
  Plan p;
  if (a.shape() == b.shape()) {
    p.same = true;
    p.out_shape = a.shape();
    p.rows = a.rows();
    p.cols = a.cols();
    return p;
  }
  const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  auto merge = [&](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " do not broadcast");
  };
  p.rows = merge(ar, br);
  p.cols = merge(ac, bc);
  p.a_rs = ar == 1 ? 0 : ac;
  p.a_cs = ac == 1 ? 0 : 1;
  p.b_rs = br == 1 ? 0 : bc;
  p.b_cs = bc == 1 ? 0 : 1;
  const std::size_t rank = std::max(a.rank(), b.rank());
  if (rank == 2) {
    p.out_shape = {p.rows, p.cols};
  } else if (rank == 1) {
    p.out_shape = {p.cols};
  }
  return p;
}

template <typename F>
Tensor apply_binary(const Plan& p, const Tensor& a, const Tensor& b, F f) {
  Tensor out(p.out_shape);
  for (std::size_t r = 0; r < p.rows; ++r)
    for (std::size_t c = 0; c < p.cols; ++c)
      out[r * p.cols + c] = f(a[r * p.a_rs + c * p.a_cs], b[r * p.b_rs + c * p.b_cs]);
  return out;
}

// Accumulates g (broadcast shape) into dst (operand shape), summing over broadcast axes.
template <typename F>
void accumulate_broadcast(const Plan& p, const Tensor& g, Tensor& dst, std::size_t rs,
                          std::size_t cs, F weight) {
  for (std::size_t r = 0; r < p.rows; ++r)
    for (std::size_t c = 0; c < p.cols; ++c) {
      const std::size_t k = r * p.cols + c;
      dst[r * rs + c * cs] += g[k] * weight(r, c);
    }
}

Var binary(Elementwise kind, Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::string_view op = kind == Elementwise::add   ? "add"
                              : kind == Elementwise::sub ? "sub"
                                                         : "mul";
  Plan p = broadcast_plan(op, av, bv);
  Tensor out(p.out_shape);
  const auto& kern = kernels::active();
  if (p.same) {
    auto fn = kind == Elementwise::add ? kern.add : kind == Elementwise::sub ? kern.sub : kern.mul;
    fn(av.data().data(), bv.data().data(), out.data().data(), out.size());
    p.a_rs = p.b_rs = p.cols;
    p.a_cs = p.b_cs = 1;
  } else if (kind == Elementwise::add) {
    out = apply_binary(p, av, bv, std::plus<>());
  } else if (kind == Elementwise::sub) {
    out = apply_binary(p, av, bv, std::minus<>());
  } else {
    out = apply_binary(p, av, bv, std::multiplies<>());
  }
  return t.record(op, std::move(out), {a, b}, [a, b, p, kind](Tape& tp, const Tensor& g) {
    const auto& kern = kernels::active();
    if (kind == Elementwise::mul) {
      const Tensor& x = tp.value(a);
      const Tensor& y = tp.value(b);
      if (tp.requires_grad(a)) {
        Tensor& ga = tp.grad_buffer(a);
        accumulate_broadcast(p, g, ga, p.a_rs, p.a_cs, [&](std::size_t r, std::size_t c) {
          return y[r * p.b_rs + c * p.b_cs];
        });
      }
      if (tp.requires_grad(b)) {
        Tensor& gb = tp.grad_buffer(b);
        accumulate_broadcast(p, g, gb, p.b_rs, p.b_cs, [&](std::size_t r, std::size_t c) {
          return x[r * p.a_rs + c * p.a_cs];
        });
      }
      return;
    }
    const double sign_b = kind == Elementwise::sub ? -1.0 : 1.0;
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_buffer(a);
      if (p.same) {
        kern.axpy(1.0, g.data().data(), ga.data().data(), g.size());
      } else {
        accumulate_broadcast(p, g, ga, p.a_rs, p.a_cs,
                             [](std::size_t, std::size_t) { return 1.0; });
      }
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_buffer(b);
      if (p.same) {
        kern.axpy(sign_b, g.data().data(), gb.data().data(), g.size());
      } else {
        accumulate_broadcast(p, g, gb, p.b_rs, p.b_cs,
                             [sign_b](std::size_t, std::size_t) { return sign_b; });
      }
    }
  });
}

template <typename Fwd, typename Deriv>
Var unary(std::string_view op, Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  return t.record(op, std::move(out), {a}, [a, deriv](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(a);
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i]);
  });
}

}  // namespace

Var elementwise(Elementwise kind, Var a, Var b) {
  if (kind != Elementwise::add && kind != Elementwise::sub && kind != Elementwise::mul) {
    throw Error("elementwise kind is unary but two operands were given");
  }
  return binary(kind, a, b);
}

Var elementwise(Elementwise kind, Var a) {
  switch (kind) {
    case Elementwise::relu:
      return unary(
          "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
          [](double x) { return x > 0.0 ? 1.0 : 0.0; });
    case Elementwise::sigmoid:
      return unary("sigmoid", a, stable_sigmoid, [](double x) {
        const double s = stable_sigmoid(x);
        return s * (1.0 - s);
      });
    case Elementwise::exp:
      return unary(
          "exp", a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
    case Elementwise::log: {
      for (double x : a.value().data()) {
        if (!(x > 0.0)) {
          throw DomainError("log of non-positive value " + std::to_string(x));
        }
      }
      return unary(
          "log", a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
    }
    case Elementwise::softplus:
      return unary("softplus", a, stable_softplus, stable_sigmoid);
    case Elementwise::square:
      return unary(
          "square", a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
    default:
      throw Error("elementwise kind is binary but one operand was given");
  }
}

Var add(Var a, Var b) { return elementwise(Elementwise::add, a, b); }
Var sub(Var a, Var b) { return elementwise(Elementwise::sub, a, b); }
Var mul(Var a, Var b) { return elementwise(Elementwise::mul, a, b); }
Var relu(Var a) { return elementwise(Elementwise::relu, a); }
Var sigmoid(Var a) { return elementwise(Elementwise::sigmoid, a); }
Var exp(Var a) { return elementwise(Elementwise::exp, a); }
Var log(Var a) { return elementwise(Elementwise::log, a); }
Var softplus(Var a) { return elementwise(Elementwise::softplus, a); }
Var square(Var a) { return elementwise(Elementwise::square, a); }

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; }, [](double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0]) {
    throw ShapeError("matmul: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  Tensor out({m, n});
  kernels::active().gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return t.record("matmul", std::move(out), {a, b}, [a, b, m, k, n](Tape& tp, const Tensor& g) {
    const auto& kern = kernels::active();
    if (tp.requires_grad(a)) {
      // dA[m x k] += dC[m x n] * B[k x n]^T
      kern.gemm_nt(g.data().data(), tp.value(b).data().data(),
                   tp.grad_buffer(a).data().data(), m, n, k);
    }
    if (tp.requires_grad(b)) {
      // dB[k x n] += A[m x k]^T * dC[m x n]
      kern.gemm_tn(tp.value(a).data().data(), g.data().data(),
                   tp.grad_buffer(b).data().data(), k, m, n);
    }
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ShapeError("transpose needs rank 2, got " + shape_string(av.shape()));
  const std::size_t r = av.shape()[0], c = av.shape()[1];
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return t.record("transpose", std::move(out), {a}, [a, r, c](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
  });
}

Var gather_rows(Var src, std::span<const std::size_t> idx) {
  Tape& t = tape_of(src);
  const Tensor& sv = src.value();
  if (sv.rank() != 2) throw ShapeError("gather_rows needs rank 2, got " + shape_string(sv.shape()));
  const std::size_t n = sv.shape()[0], d = sv.shape()[1];
  for (std::size_t i : idx) {
    if (i >= n) {
      throw IndexError("gather_rows: index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(n) + ")");
    }
  }
  Tensor out({idx.size(), d});
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(sv.data().data() + idx[r] * d, d, out.data().data() + r * d);
  std::vector<std::size_t> ids(idx.begin(), idx.end());
  return t.record("gather_rows", std::move(out), {src},
                  [src, d, ids = std::move(ids)](Tape& tp, const Tensor& g) {
                    Tensor& gs = tp.grad_buffer(src);
                    const auto& kern = kernels::active();
                    for (std::size_t r = 0; r < ids.size(); ++r)
                      kern.axpy(1.0, g.data().data() + r * d, gs.data().data() + ids[r] * d, d);
                  });
}

Var scatter_add_rows(Var values, std::span<const std::size_t> idx, std::size_t n) {
  Tape& t = tape_of(values);
  const Tensor& vv = values.value();
  if (vv.rank() != 2) {
    throw ShapeError("scatter_add_rows needs rank 2, got " + shape_string(vv.shape()));
  }
  const std::size_t m = vv.shape()[0], d = vv.shape()[1];
  if (idx.size() != m) {
    throw ShapeError("scatter_add_rows: " + std::to_string(idx.size()) + " indices for " +
                     std::to_string(m) + " rows");
  }
  for (std::size_t i : idx) {
    if (i >= n) {
      throw IndexError("scatter_add_rows: index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(n) + ")");
    }
  }
  Tensor out({n, d});
  const auto& kern = kernels::active();
  for (std::size_t r = 0; r < m; ++r)
    kern.axpy(1.0, vv.data().data() + r * d, out.data().data() + idx[r] * d, d);
  std::vector<std::size_t> ids(idx.begin(), idx.end());
  return t.record("scatter_add_rows", std::move(out), {values},
                  [values, d, ids = std::move(ids)](Tape& tp, const Tensor& g) {
                    Tensor& gv = tp.grad_buffer(values);
                    const auto& kern = kernels::active();
                    for (std::size_t r = 0; r < ids.size(); ++r)
                      kern.axpy(1.0, g.data().data() + ids[r] * d, gv.data().data() + r * d, d);
                  });
}

Var reduce(Reduce kind, Var a, Axis axis) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  if (av.rank() > 2) throw ShapeError("reduce: rank > 2");
  const std::size_t R = av.rows(), C = av.cols();
  // Group g of element (r, c) and the group count.
  std::size_t groups = 1, group_len = av.size();
  Tensor::Shape out_shape;
  switch (axis) {
    case Axis::all: break;
    case Axis::rows:
      groups = C;
      group_len = R;
      out_shape = {1, C};
      break;
    case Axis::cols:
      groups = R;
      group_len = C;
      out_shape = {R, 1};
      break;
  }
  if (group_len == 0 || av.size() == 0) throw ShapeError("reduce over an empty axis");
  auto group_of = [axis, C](std::size_t r, std::size_t c) -> std::size_t {
    switch (axis) {
      case Axis::rows: return c;
      case Axis::cols: return r;
      default: return 0;
    }
  };
  Tensor out(out_shape);
  if (kind == Reduce::logsumexp) {
    std::vector<double> mx(groups, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        double& m = mx[group_of(r, c)];
        m = std::max(m, av[r * C + c]);
      }
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t gi = group_of(r, c);
        out[gi] += std::exp(av[r * C + c] - mx[gi]);
      }
    for (std::size_t gi = 0; gi < groups; ++gi) out[gi] = mx[gi] + std::log(out[gi]);
  } else {
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) out[group_of(r, c)] += av[r * C + c];
    if (kind == Reduce::mean) {
      for (double& v : out.data()) v /= static_cast<double>(group_len);
    }
  }
  const std::string_view op = kind == Reduce::sum    ? "sum"
                              : kind == Reduce::mean ? "mean"
                                                     : "logsumexp";
  const auto self_id = static_cast<std::uint32_t>(t.size());
  return t.record(op, std::move(out), {a},
                  [a, kind, R, C, group_len, group_of, self_id](Tape& tp, const Tensor& g) {
                    const Tensor& x = tp.value(a);
                    Tensor& ga = tp.grad_buffer(a);
                    if (kind == Reduce::logsumexp) {
                      const Tensor& lse = tp.value(Var{&tp, self_id});
                      for (std::size_t r = 0; r < R; ++r)
                        for (std::size_t c = 0; c < C; ++c) {
                          const std::size_t gi = group_of(r, c);
                          ga[r * C + c] += g[gi] * std::exp(x[r * C + c] - lse[gi]);
                        }
                      return;
                    }
                    const double w = kind == Reduce::mean ? 1.0 / static_cast<double>(group_len)
                                                          : 1.0;
                    for (std::size_t r = 0; r < R; ++r)
                      for (std::size_t c = 0; c < C; ++c) ga[r * C + c] += w * g[group_of(r, c)];
                  });
}

Var pick_columns(Var a, std::span<const std::size_t> idx) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ShapeError("pick_columns needs rank 2");
  const std::size_t R = av.shape()[0], C = av.shape()[1];
  if (idx.size() != R) throw ShapeError("pick_columns: one index per row required");
  Tensor out({R, 1});
  for (std::size_t r = 0; r < R; ++r) {
    if (idx[r] >= C) {
      throw IndexError("pick_columns: column " + std::to_string(idx[r]) + " out of range [0, " +
                       std::to_string(C) + ")");
    }
    out[r] = av[r * C + idx[r]];
  }
  std::vector<std::size_t> ids(idx.begin(), idx.end());
  return t.record("pick_columns", std::move(out), {a},
                  [a, C, ids = std::move(ids)](Tape& tp, const Tensor& g) {
                    Tensor& ga = tp.grad_buffer(a);
                    for (std::size_t r = 0; r < ids.size(); ++r) ga[r * C + ids[r]] += g[r];
                  });
}

Var stop_gradient(Var a) {
  Tape& t = tape_of(a);
  return t.constant(t.detached_value(a.value()));
}

Tensor Tape::detached_value(const Tensor& live) {
  if (sg_replay_ != nullptr) {
    if (sg_next_ >= sg_replay_->size()) throw ShapeError("stop_gradient replay exhausted");
    const Tensor& v = (*sg_replay_)[sg_next_++];
    if (v.shape() != live.shape()) throw ShapeError("stop_gradient replay shape mismatch");
    return v;
  }
  if (sg_capture_ != nullptr) sg_capture_->push_back(live);
  return live;
}

}  // namespace gmvp
