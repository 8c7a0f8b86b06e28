#include "adda/autodiff/optim.hpp"

#include <cmath>

namespace adda {
namespace {

const Tensor* find_grad(const Gradients& grads, const Parameter* p) {
  auto it = grads.find(p);
  return it == grads.end() ? nullptr : &it->second;
}

void check_gradients(std::span<Parameter* const> params, const Gradients& grads,
                     const char* optimizer) {
  for (const Parameter* p : params) {
    const Tensor* g = find_grad(grads, p);
    if (g == nullptr) continue;
    if (g->size() != p->value.size()) {
      throw ShapeError(std::string(optimizer) + ": gradient for '" + p->name + "' has shape " +
                       shape_string(g->shape()) + ", parameter has " +
                       shape_string(p->value.shape()));
    }
    if (!g->all_finite()) {
      throw NumericError(std::string(optimizer) + ": non-finite gradient for parameter '" +
                         p->name + "'");
    }
  }
}

void check_updated(const Parameter& p, const char* optimizer) {
  if (!p.value.all_finite()) {
    throw NumericError(std::string(optimizer) + ": parameter '" + p.name +
                       "' became non-finite after the update");
  }
}

}  // namespace

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  set_lr(lr);
}

void Adam::set_lr(double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  lr_ = lr;
}

void Adam::step(std::span<Parameter* const> params, const Gradients& grads) {
  check_gradients(params, grads, "adam");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(beta1_, t);
  const double correction2 = 1.0 - std::pow(beta2_, t);
  for (Parameter* p : params) {
    const Tensor* g = find_grad(grads, p);
    if (g == nullptr) continue;
    auto [it, inserted] = moments_.try_emplace(p->name);
    if (inserted) {
      it->second.first = Tensor(p->value.shape(), 0.0);
      it->second.second = Tensor(p->value.shape(), 0.0);
    }
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double gi = (*g)[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p->value[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
    check_updated(*p, "adam");
  }
}

void Adam::restore(std::uint64_t steps, std::map<std::string, AdamMoments> moments) {
  steps_ = steps;
  moments_ = std::move(moments);
}

Sgd::Sgd(double lr) : lr_(lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
}

void Sgd::step(std::span<Parameter* const> params, const Gradients& grads) {
  check_gradients(params, grads, "sgd");
  ++steps_;
  for (Parameter* p : params) {
    const Tensor* g = find_grad(grads, p);
    if (g == nullptr) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr_ * (*g)[i];
    check_updated(*p, "sgd");
  }
}

}  // namespace adda
