#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adda/autodiff/tensor.hpp"

namespace adda {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;

  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a primitive's backward function sees: the upstream gradient and
/// mutable gradient buffers for those inputs that require one.
class BackwardContext {
 public:
  const Tensor& out_grad() const { return *out_grad_; }
  const Tensor& out_value() const { return *out_value_; }
  const Tensor& input(std::size_t i) const { return *inputs_[i]; }
  /// nullptr when input i does not require a gradient.
  Tensor* grad(std::size_t i) { return grads_[i]; }

 private:
  friend class Tape;
  const Tensor* out_grad_ = nullptr;
  const Tensor* out_value_ = nullptr;
  std::vector<const Tensor*> inputs_;
  std::vector<Tensor*> grads_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

/// Gradients of tracked parameters, keyed by parameter identity.
using Gradients = std::unordered_map<const Parameter*, Tensor>;

/// Define-by-run record of primitive operations.
///
/// Nodes are appended in execution order, so every node's inputs precede it.
/// backward() walks the nodes once in exact reverse order. A tape may be
/// differentiated several times with different losses; gradients are reset at
/// the start of every call.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Records a constant that aliases caller-owned storage.
  Var constant_ref(const Tensor& value);
  /// A free leaf that requires a gradient (not tied to any Parameter).
  Var variable(Tensor value);
  /// A parameter leaf. Untracked parameters behave as constants.
  Var param(const Parameter& parameter, bool track);

  /// Appends a primitive result. When no input requires a gradient the
  /// backward function is dropped and the node is a constant.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs,
             BackwardFn backward);

  /// Reverse sweep from a scalar loss. Returns gradients for every tracked
  /// parameter leaf on the tape, zero-filled for leaves off the loss path.
  Gradients backward(Var loss);

  /// Gradient of a node from the last backward() call; zeros if none reached it.
  Tensor grad(Var v) const;

  const Tensor& value(std::size_t id) const { return *nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::string_view op(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  /// Per-node count of backward visits in the last backward() call.
  const std::vector<unsigned>& visit_counts() const { return visits_; }

 private:
  struct Node {
    const Tensor* value = nullptr;
    Tensor owned;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    const Parameter* param = nullptr;
    std::string_view op;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Node& push(std::string_view op);

  std::deque<Node> nodes_;
  std::vector<unsigned> visits_;
};

}  // namespace adda
