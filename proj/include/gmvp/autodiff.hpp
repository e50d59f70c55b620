#pragma once

// Tape-based reverse-mode automatic differentiation over gmvp::Tensor.
//
// A Tape records every op of a forward pass as a node holding the op's value and
// a local backward rule. Vars are lightweight handles (tape pointer + node id).
// Every forward value is checked for NaN/Inf when recorded, and every gradient
// is checked as it propagates; both raise NumericError naming the op.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmvp/param_store.hpp"
#include "gmvp/tensor.hpp"

namespace gmvp {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Tensor::Shape& shape() const { return value().shape(); }
};

enum class Elementwise { add, mul, sub, relu, sigmoid, exp, log, softplus, square };
enum class Reduce { sum, mean, logsumexp };

// Reduction axis. `rows` collapses axis 0 ([R x C] -> [1 x C]); `cols` collapses
// axis 1 ([R x C] -> [R x 1]); `all` yields a scalar.
enum class Axis { all, rows, cols };

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  // A tape built with record_gradients=false keeps values only: params become
  // constants and no backward rules are stored.
  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf whose gradient is tracked iff value.requires_grad.
  Var leaf(Tensor value);
  // Leaf bound to a named parameter; repeated calls return the same Var.
  Var param(const ParamStore& store, const std::string& name);

  // Appends an op node. Inputs must already be on this tape.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  bool recording() const { return recording_; }

  // Gradient accumulator for v, zero-filled on first access.
  Tensor& grad_buffer(Var v);
  // Null when no gradient reached v during the last backward pass.
  const Tensor* grad(Var v) const;

  // Reverse pass from a single-element loss. Each reachable node is visited once.
  void run_backward(Var loss);
  std::size_t last_backward_visits() const { return visits_; }

  std::size_t size() const { return nodes_.size(); }
  void clear();

  // Stop-gradient values can be captured on one tape and replayed, in call order, on
  // another. Finite-difference checks use this to hold detached targets fixed.
  void capture_stop_gradients(std::vector<Tensor>* sink) { sg_capture_ = sink; }
  void replay_stop_gradients(const std::vector<Tensor>* source) {
    sg_replay_ = source;
    sg_next_ = 0;
  }
  Tensor detached_value(const Tensor& live);

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
    std::string param_name;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::map<std::string, std::uint32_t> param_ids_;
  bool recording_;
  std::size_t visits_ = 0;
  std::vector<Tensor>* sg_capture_ = nullptr;
  const std::vector<Tensor>* sg_replay_ = nullptr;
  std::size_t sg_next_ = 0;

  friend std::map<std::string, Tensor> backward(Var loss, Tape& tape, const ParamStore& params);
};

// Runs the reverse pass and returns one gradient per parameter of `params`
// (exact zeros for parameters the loss does not reach). The tape is cleared afterwards.
std::map<std::string, Tensor> backward(Var loss, Tape& tape, const ParamStore& params);

// ---- ops -------------------------------------------------------------------

Var elementwise(Elementwise kind, Var a);
Var elementwise(Elementwise kind, Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
Var square(Var a);
Var neg(Var a);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

Var matmul(Var a, Var b);
Var transpose(Var a);

Var gather_rows(Var src, std::span<const std::size_t> idx);
Var scatter_add_rows(Var values, std::span<const std::size_t> idx, std::size_t n);

Var reduce(Reduce kind, Var a, Axis axis = Axis::all);
inline Var sum(Var a, Axis axis = Axis::all) { return reduce(Reduce::sum, a, axis); }
inline Var mean(Var a, Axis axis = Axis::all) { return reduce(Reduce::mean, a, axis); }
inline Var logsumexp(Var a, Axis axis = Axis::all) { return reduce(Reduce::logsumexp, a, axis); }

// out[r] = a[r, idx[r]] as an [R x 1] column.
Var pick_columns(Var a, std::span<const std::size_t> idx);

// Same value, no gradient flows back through it.
Var stop_gradient(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }

// Numerically stable scalar helpers shared with test oracles.
double stable_sigmoid(double x);
double stable_softplus(double x);

}  // namespace gmvp
