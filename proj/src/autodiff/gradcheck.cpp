#include "adda/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace adda {

GradCheckResult check_gradients(std::string name, std::span<Parameter* const> params,
                                const LossBuilder& build, double step, double floor) {
  GradCheckResult result;
  result.name = std::move(name);

  Gradients analytic;
  {
    Tape tape;
    analytic = tape.backward(build(tape));
  }

  auto evaluate = [&build]() {
    Tape tape;
    return build(tape).value().item();
  };

  for (Parameter* p : params) {
    auto found = analytic.find(p);
    const Tensor zeros(p->value.shape(), 0.0);
    const Tensor& grad = found == analytic.end() ? zeros : found->second;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + step;
      const double up = evaluate();
      p->value[i] = original - step;
      const double down = evaluate();
      p->value[i] = original;

      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(grad[i]), std::abs(numeric), floor});
      const double err = std::abs(grad[i] - numeric) / denom;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p->name;
      }
      ++result.entries_checked;
    }
  }
  return result;
}

}  // namespace adda
