#include "adda/autodiff/tape.hpp"

#include <stdexcept>

namespace adda {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Tape::Node& Tape::push(std::string_view op) {
  Node& node = nodes_.emplace_back();
  node.op = op;
  return node;
}

Var Tape::constant(Tensor value) {
  Node& node = push("constant");
  node.owned = std::move(value);
  node.value = &node.owned;
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant_ref(const Tensor& value) {
  Node& node = push("constant");
  node.value = &value;
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  Node& node = push("variable");
  node.owned = std::move(value);
  node.value = &node.owned;
  node.requires_grad = true;
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const Parameter& parameter, bool track) {
  Node& node = push("param");
  node.value = &parameter.value;
  if (track && !parameter.frozen) {
    node.requires_grad = true;
    node.param = &parameter;
  }
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value,
                 std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs,
                 BackwardFn backward) {
  bool needs_grad = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) {
      throw std::logic_error(std::string(op) + ": input recorded on another tape");
    }
    needs_grad = needs_grad || nodes_[in.id()].requires_grad;
  }
  Node& node = push(op);
  node.owned = std::move(value);
  node.value = &node.owned;
  if (needs_grad) {
    node.requires_grad = true;
    node.inputs.reserve(inputs.size());
    for (const Var& in : inputs) node.inputs.push_back(in.id());
    node.backward = std::move(backward);
  }
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) {
  if (loss.tape() != this) {
    throw std::logic_error("backward: loss recorded on another tape");
  }
  const Tensor& loss_value = value(loss.id());
  if (loss_value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     shape_string(loss_value.shape()));
  }
  for (Node& node : nodes_) {
    node.grad = Tensor();
    node.has_grad = false;
  }
  visits_.assign(nodes_.size(), 0);

  Node& root = nodes_[loss.id()];
  if (root.requires_grad) {
    root.grad = Tensor(loss_value.shape(), 1.0);
    root.has_grad = true;
  }

  BackwardContext ctx;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    ++visits_[i];
    ctx.out_grad_ = &node.grad;
    ctx.out_value_ = node.value;
    ctx.inputs_.clear();
    ctx.grads_.clear();
    for (std::size_t in : node.inputs) {
      Node& input = nodes_[in];
      ctx.inputs_.push_back(input.value);
      if (input.requires_grad) {
        if (!input.has_grad) {
          input.grad = Tensor(input.value->shape(), 0.0);
          input.has_grad = true;
        }
        ctx.grads_.push_back(&input.grad);
      } else {
        ctx.grads_.push_back(nullptr);
      }
    }
    node.backward(ctx);
  }

  Gradients grads;
  for (Node& node : nodes_) {
    if (node.param == nullptr) continue;
    auto [it, inserted] = grads.try_emplace(node.param);
    if (inserted) it->second = Tensor(node.value->shape(), 0.0);
    if (node.has_grad) {
      auto dst = it->second.data();
      auto src = node.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  return grads;
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id());
  if (node.has_grad) return node.grad;
  return Tensor(node.value->shape(), 0.0);
}

}  // namespace adda
