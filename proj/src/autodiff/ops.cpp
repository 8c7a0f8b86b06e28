#include "adda/autodiff/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace adda {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_mismatch(std::string_view op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                   " and " + shape_string(b.shape()));
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::logic_error("primitive applied to an empty Var");
  return *a.tape();
}

struct Broadcast {
  std::size_t rows, cols;
  std::size_t a_rows, a_cols, b_rows, b_cols;

  std::size_t a_index(std::size_t r, std::size_t c) const {
    return (a_rows == 1 ? 0 : r) * a_cols + (a_cols == 1 ? 0 : c);
  }
  std::size_t b_index(std::size_t r, std::size_t c) const {
    return (b_rows == 1 ? 0 : r) * b_cols + (b_cols == 1 ? 0 : c);
  }
};

Broadcast broadcast(std::string_view op, const Tensor& a, const Tensor& b) {
  const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  auto merge = [&](std::size_t x, std::size_t y) -> std::size_t {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    shape_mismatch(op, a, b);
  };
  return Broadcast{merge(ar, br), merge(ac, bc), ar, ac, br, bc};
}

template <typename Forward, typename DA, typename DB>
Var binary(std::string_view op, Var a, Var b, Forward f, DA da, DB db) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const Broadcast bc = broadcast(op, x, y);
  Tensor out = Tensor::matrix(bc.rows, bc.cols);
  const bool same = x.size() == out.size() && y.size() == out.size();
  if (same) {
    const double* px = x.data().data();
    const double* py = y.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0, n = out.size(); i < n; ++i) po[i] = f(px[i], py[i]);
  } else {
    for (std::size_t r = 0; r < bc.rows; ++r) {
      for (std::size_t c = 0; c < bc.cols; ++c) {
        out(r, c) = f(x[bc.a_index(r, c)], y[bc.b_index(r, c)]);
      }
    }
  }
  return tape_of(a).record(op, std::move(out), {a, b}, [bc, same, da, db](BackwardContext& ctx) {
    const double* g = ctx.out_grad().data().data();
    const double* x = ctx.input(0).data().data();
    const double* y = ctx.input(1).data().data();
    Tensor* gx = ctx.grad(0);
    Tensor* gy = ctx.grad(1);
    if (same) {
      const std::size_t n = bc.rows * bc.cols;
      if (gx != nullptr) {
        double* p = gx->data().data();
        for (std::size_t i = 0; i < n; ++i) p[i] += g[i] * da(x[i], y[i]);
      }
      if (gy != nullptr) {
        double* p = gy->data().data();
        for (std::size_t i = 0; i < n; ++i) p[i] += g[i] * db(x[i], y[i]);
      }
      return;
    }
    double* px = gx != nullptr ? gx->data().data() : nullptr;
    double* py = gy != nullptr ? gy->data().data() : nullptr;
    for (std::size_t r = 0; r < bc.rows; ++r) {
      for (std::size_t c = 0; c < bc.cols; ++c) {
        const std::size_t ia = bc.a_index(r, c);
        const std::size_t ib = bc.b_index(r, c);
        const double up = g[r * bc.cols + c];
        if (px != nullptr) px[ia] += up * da(x[ia], y[ib]);
        if (py != nullptr) py[ib] += up * db(x[ia], y[ib]);
      }
    }
  });
}

/// Elementwise unary op; the derivative receives (input, output).
template <typename Forward, typename Derivative>
Var unary(std::string_view op, Var a, Forward f, Derivative df) {
  const Tensor& x = a.value();
  Tensor out = Tensor::matrix(x.rows(), x.cols());
  const double* px = x.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0, n = x.size(); i < n; ++i) po[i] = f(px[i]);
  return tape_of(a).record(op, std::move(out), {a}, [df](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    const double* g = ctx.out_grad().data().data();
    const double* x = ctx.input(0).data().data();
    const double* y = ctx.out_value().data().data();
    double* p = gx->data().data();
    for (std::size_t i = 0, n = gx->size(); i < n; ++i) p[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) shape_mismatch("matmul", x, y);
  Tensor out = Tensor::matrix(x.rows(), y.cols());
  as_matrix(out).noalias() = as_matrix(x) * as_matrix(y);
  return tape_of(a).record("matmul", std::move(out), {a, b}, [](BackwardContext& ctx) {
    const auto g = as_matrix(ctx.out_grad());
    if (Tensor* gx = ctx.grad(0)) {
      as_matrix(*gx).noalias() += g * as_matrix(ctx.input(1)).transpose();
    }
    if (Tensor* gy = ctx.grad(1)) {
      as_matrix(*gy).noalias() += as_matrix(ctx.input(0)).transpose() * g;
    }
  });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var shift(Var a, double offset) {
  return unary(
      "shift", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      "leaky_relu", a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var softmax(Var a) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) peak = std::max(peak, x(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += out(r, c) = std::exp(x(r, c) - peak);
    for (std::size_t c = 0; c < cols; ++c) out(r, c) /= total;
  }
  return tape_of(a).record("softmax", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    const Tensor& g = ctx.out_grad();
    const Tensor& y = ctx.out_value();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) (*gx)(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var log_softmax(Var a) {
  const Tensor& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) peak = std::max(peak, x(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(x(r, c) - peak);
    const double log_norm = peak + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = x(r, c) - log_norm;
  }
  return tape_of(a).record("log_softmax", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    const Tensor& g = ctx.out_grad();
    const Tensor& y = ctx.out_value();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) total += g(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) {
        (*gx)(r, c) += g(r, c) - std::exp(y(r, c)) * total;
      }
    }
  });
}

Var masked_softmax(Var a, const Tensor& mask) {
  const Tensor& x = a.value();
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    shape_mismatch("masked_softmax", x, mask);
  }
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask(r, c) != 0.0) peak = std::max(peak, x(r, c));
    }
    if (peak == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("masked_softmax: row " + std::to_string(r) +
                                  " has every position masked");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask(r, c) != 0.0) total += out(r, c) = std::exp(x(r, c) - peak);
    }
    for (std::size_t c = 0; c < cols; ++c) out(r, c) /= total;
  }
  return tape_of(a).record("masked_softmax", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    const Tensor& g = ctx.out_grad();
    const Tensor& y = ctx.out_value();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) (*gx)(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return tape_of(a).record("sum", Tensor::scalar(total), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    const double up = ctx.out_grad()[0];
    for (double& v : gx->data()) v += up;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return tape_of(a).record("mean", Tensor::scalar(total / static_cast<double>(n)), {a},
                           [n](BackwardContext& ctx) {
                             Tensor* gx = ctx.grad(0);
                             if (gx == nullptr) return;
                             const double up = ctx.out_grad()[0] / static_cast<double>(n);
                             for (double& v : gx->data()) v += up;
                           });
}

Var sum_rows(Var a) {
  const Tensor& x = a.value();
  Tensor out = Tensor::matrix(1, x.cols());
  as_matrix(out) = as_matrix(x).colwise().sum();
  return tape_of(a).record("sum_rows", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    as_matrix(*gx).rowwise() += as_matrix(ctx.out_grad()).row(0);
  });
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  Tensor out = Tensor::matrix(x.rows(), 1);
  as_matrix(out) = as_matrix(x).rowwise().sum();
  return tape_of(a).record("sum_cols", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    as_matrix(*gx).colwise() += as_matrix(ctx.out_grad()).col(0);
  });
}

Var squared_l2_distance(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    shape_mismatch("squared_l2_distance", x, y);
  }
  Tensor out = Tensor::matrix(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - y(r, c);
      total += d * d;
    }
    out(r, 0) = total;
  }
  return tape_of(a).record(
      "squared_l2_distance", std::move(out), {a, b}, [](BackwardContext& ctx) {
        const Tensor& g = ctx.out_grad();
        const Tensor& x = ctx.input(0);
        const Tensor& y = ctx.input(1);
        Tensor* gx = ctx.grad(0);
        Tensor* gy = ctx.grad(1);
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = 2.0 * (x(r, c) - y(r, c)) * g(r, 0);
            if (gx != nullptr) (*gx)(r, c) += d;
            if (gy != nullptr) (*gy)(r, c) -= d;
          }
        }
      });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_mismatch("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    as_matrix(out).middleCols(static_cast<Eigen::Index>(offset),
                              static_cast<Eigen::Index>(p.cols())) = as_matrix(p.value());
    offset += p.cols();
  }
  const std::size_t n = parts.size();
  return tape_of(parts[0]).record("concat_cols", std::move(out), parts,
                                  [n](BackwardContext& ctx) {
                                    const auto g = as_matrix(ctx.out_grad());
                                    std::size_t offset = 0;
                                    for (std::size_t i = 0; i < n; ++i) {
                                      const auto width =
                                          static_cast<Eigen::Index>(ctx.input(i).cols());
                                      if (Tensor* gi = ctx.grad(i)) {
                                        as_matrix(*gi) += g.middleCols(
                                            static_cast<Eigen::Index>(offset), width);
                                      }
                                      offset += static_cast<std::size_t>(width);
                                    }
                                  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_mismatch("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Tensor out = Tensor::matrix(rows, cols);
  auto dst = out.data().begin();
  for (const Var& p : parts) {
    dst = std::copy(p.value().data().begin(), p.value().data().end(), dst);
  }
  const std::size_t n = parts.size();
  return tape_of(parts[0]).record("concat_rows", std::move(out), parts,
                                  [n](BackwardContext& ctx) {
                                    auto src = ctx.out_grad().data().begin();
                                    for (std::size_t i = 0; i < n; ++i) {
                                      const std::size_t len = ctx.input(i).size();
                                      if (Tensor* gi = ctx.grad(i)) {
                                        auto dst = gi->data();
                                        for (std::size_t k = 0; k < len; ++k) dst[k] += src[k];
                                      }
                                      src += static_cast<std::ptrdiff_t>(len);
                                    }
                                  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     shape_string(x.shape()));
  }
  Tensor out = Tensor::matrix(x.rows(), count);
  as_matrix(out) = as_matrix(x).middleCols(static_cast<Eigen::Index>(begin),
                                           static_cast<Eigen::Index>(count));
  return tape_of(a).record("slice_cols", std::move(out), {a},
                           [begin, count](BackwardContext& ctx) {
                             Tensor* gx = ctx.grad(0);
                             if (gx == nullptr) return;
                             as_matrix(*gx).middleCols(static_cast<Eigen::Index>(begin),
                                                       static_cast<Eigen::Index>(count)) +=
                                 as_matrix(ctx.out_grad());
                           });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     shape_string(x.shape()));
  }
  const std::size_t cols = x.cols();
  Tensor out = Tensor::matrix(count, cols);
  std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(begin * cols), count * cols,
              out.data().begin());
  return tape_of(a).record("slice_rows", std::move(out), {a},
                           [begin, cols](BackwardContext& ctx) {
                             Tensor* gx = ctx.grad(0);
                             if (gx == nullptr) return;
                             const auto g = ctx.out_grad().data();
                             auto dst = gx->data().subspan(begin * cols, g.size());
                             for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
                           });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& x = a.value();
  if (rows * cols != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as [" +
                     std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
  Tensor out({rows, cols}, x.values());
  return tape_of(a).record("reshape", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    const auto g = ctx.out_grad().data();
    auto dst = gx->data();
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out = Tensor::matrix(x.cols(), x.rows());
  as_matrix(out) = as_matrix(x).transpose();
  return tape_of(a).record("transpose", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    as_matrix(*gx) += as_matrix(ctx.out_grad()).transpose();
  });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  const Tensor& x = table.value();
  const std::size_t cols = x.cols();
  Tensor out = Tensor::matrix(ids.size(), cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= x.rows()) {
      throw ShapeError("gather_rows: row id " + std::to_string(ids[i]) +
                       " out of range for table " + shape_string(x.shape()));
    }
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(ids[i] * cols), cols,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  return tape_of(table).record("gather_rows", std::move(out), {table},
                               [rows = std::move(rows), cols](BackwardContext& ctx) {
                                 Tensor* gx = ctx.grad(0);
                                 if (gx == nullptr) return;
                                 const Tensor& g = ctx.out_grad();
                                 for (std::size_t i = 0; i < rows.size(); ++i) {
                                   for (std::size_t c = 0; c < cols; ++c) {
                                     (*gx)(rows[i], c) += g(i, c);
                                   }
                                 }
                               });
}

Var pick(Var a, std::span<const std::size_t> cols) {
  const Tensor& x = a.value();
  if (cols.size() != x.rows()) {
    throw ShapeError("pick: " + std::to_string(cols.size()) + " indices for " +
                     shape_string(x.shape()));
  }
  Tensor out = Tensor::matrix(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (cols[r] >= x.cols()) {
      throw ShapeError("pick: column " + std::to_string(cols[r]) + " out of range for " +
                       shape_string(x.shape()));
    }
    out(r, 0) = x(r, cols[r]);
  }
  std::vector<std::size_t> index(cols.begin(), cols.end());
  return tape_of(a).record("pick", std::move(out), {a},
                           [index = std::move(index)](BackwardContext& ctx) {
                             Tensor* gx = ctx.grad(0);
                             if (gx == nullptr) return;
                             for (std::size_t r = 0; r < index.size(); ++r) {
                               (*gx)(r, index[r]) += ctx.out_grad()(r, 0);
                             }
                           });
}

Var detach(Var a) { return tape_of(a).constant_ref(a.value()); }

}  // namespace adda
