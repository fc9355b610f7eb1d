#include "refcap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "refcap/kernels.hpp"

namespace refcap {
namespace {

using kernels::Trans;

template <typename T>
void require_same_size(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

}  // namespace

template <typename T>
bool Graph<T>::needs_grad(std::initializer_list<const Tensor*> inputs) const {
  if (!record_) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
Tensor<T> Graph<T>::make(Shape shape, bool grad) {
  return Tensor::zeros(std::move(shape), grad);
}

template <typename T>
Tensor<T> Graph<T>::matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), p = a.cols(), q = b.cols();
  if (b.rows() != p) {
    throw ShapeError("matmul: inner extents differ for " +
                     shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  const bool g = needs_grad({&a, &b});
  Tensor out = make({m, q}, g);
  kernels::gemm<T>(Trans::kNo, Trans::kNo, m, q, p, a.value(), b.value(),
                   out.value());
  if (g) {
    push([a, b, out, m, p, q]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) {
        kernels::gemm<T>(Trans::kNo, Trans::kYes, m, p, q, out.grad(),
                         b.value(), a.grad());
      }
      if (b.requires_grad()) {
        kernels::gemm<T>(Trans::kYes, Trans::kNo, p, q, m, a.value(),
                         out.grad(), b.grad());
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  const std::size_t r = x.rows(), in = x.cols(), outd = w.rows();
  if (w.cols() != in) {
    throw ShapeError("linear: input " + shape_to_string(x.shape()) +
                     " does not match weight " + shape_to_string(w.shape()));
  }
  if (bias.defined() && bias.size() != outd) {
    throw ShapeError("linear: bias " + shape_to_string(bias.shape()) +
                     " does not match weight " + shape_to_string(w.shape()));
  }
  const bool g = needs_grad({&x, &w, &bias});
  Tensor out = make({r, outd}, g);
  auto ov = out.value();
  if (bias.defined()) {
    auto bv = bias.value();
    for (std::size_t i = 0; i < r; ++i) {
      std::copy(bv.begin(), bv.end(), ov.begin() + i * outd);
    }
  }
  kernels::gemm<T>(Trans::kNo, Trans::kYes, r, outd, in, x.value(), w.value(), ov);
  if (g) {
    push([x, w, bias, out, r, in, outd]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      if (x.requires_grad()) {
        kernels::gemm<T>(Trans::kNo, Trans::kNo, r, in, outd, dy, w.value(),
                         x.grad());
      }
      if (w.requires_grad()) {
        kernels::gemm<T>(Trans::kYes, Trans::kNo, outd, in, r, dy, x.value(),
                         w.grad());
      }
      if (bias.defined() && bias.requires_grad()) {
        auto db = bias.grad();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < outd; ++j) db[j] += dy[i * outd + j];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const bool g = needs_grad({&a});
  Tensor out = make({n, m}, g);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  }
  if (g) {
    push([a, out, m, n]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto da = a.grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) da[i * n + j] += dy[j * m + i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::add(const Tensor& a, const Tensor& b) {
  require_same_size(a, b, "add");
  const bool g = needs_grad({&a, &b});
  Tensor out = make(a.shape(), g);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  if (g) {
    push([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      for (const Tensor* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto d = t->grad();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::add_row(const Tensor& a, const Tensor& row) {
  const std::size_t m = a.rows(), n = a.cols();
  if (row.size() != n) {
    throw ShapeError("add_row: row " + shape_to_string(row.shape()) +
                     " does not match " + shape_to_string(a.shape()));
  }
  const bool g = needs_grad({&a, &row});
  Tensor out = make(a.shape(), g);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] + row[j];
  }
  if (g) {
    push([a, row, out, m, n]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      if (a.requires_grad()) {
        auto d = a.grad();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
      }
      if (row.requires_grad()) {
        auto d = row.grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) d[j] += dy[i * n + j];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::hadamard(const Tensor& a, const Tensor& b) {
  require_same_size(a, b, "hadamard");
  const bool g = needs_grad({&a, &b});
  Tensor out = make(a.shape(), g);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  if (g) {
    push([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      if (a.requires_grad()) {
        auto d = a.grad();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * b[i];
      }
      if (b.requires_grad()) {
        auto d = b.grad();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * a[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::scale(const Tensor& a, T factor) {
  const bool g = needs_grad({&a});
  Tensor out = make(a.shape(), g);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
  if (g) {
    push([a, out, factor]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::sigmoid(const Tensor& a) {
  const bool g = needs_grad({&a});
  Tensor out = make(a.shape(), g);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T x = a[i];
    // Branch keeps exp() from overflowing for large |x|.
    out[i] = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                       : std::exp(x) / (T(1) + std::exp(x));
  }
  if (g) {
    push([a, out]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += dy[i] * out[i] * (T(1) - out[i]);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::tanh(const Tensor& a) {
  const bool g = needs_grad({&a});
  Tensor out = make(a.shape(), g);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
  if (g) {
    push([a, out]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += dy[i] * (T(1) - out[i] * out[i]);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::softmax(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const bool g = needs_grad({&a});
  Tensor out = make(a.shape(), g);
  kernels::softmax_rows<T>(m, n, a.value(), out.value());
  if (g) {
    push([a, out, m, n]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < m; ++i) {
        T dot = T(0);
        for (std::size_t j = 0; j < n; ++j) dot += dy[i * n + j] * out[i * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          d[i * n + j] += out[i * n + j] * (dy[i * n + j] - dot);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::layer_norm(const Tensor& a, T eps) {
  if (!(eps > T(0))) throw std::invalid_argument("layer_norm: eps must be > 0");
  const std::size_t m = a.rows(), n = a.cols();
  const bool g = needs_grad({&a});
  Tensor out = make(a.shape(), g);
  std::vector<T> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    T mu = T(0);
    for (std::size_t j = 0; j < n; ++j) mu += a[i * n + j];
    mu /= T(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      const T c = a[i * n + j] - mu;
      var += c * c;
    }
    var /= T(n);
    inv_std[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = (a[i * n + j] - mu) * inv_std[i];
    }
  }
  if (g) {
    push([a, out, m, n, inv_std = std::move(inv_std)]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < m; ++i) {
        T mean_dy = T(0), mean_dy_xhat = T(0);
        for (std::size_t j = 0; j < n; ++j) {
          mean_dy += dy[i * n + j];
          mean_dy_xhat += dy[i * n + j] * out[i * n + j];
        }
        mean_dy /= T(n);
        mean_dy_xhat /= T(n);
        for (std::size_t j = 0; j < n; ++j) {
          d[i * n + j] += inv_std[i] * (dy[i * n + j] - mean_dy -
                                        out[i * n + j] * mean_dy_xhat);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  bool g = false;
  std::size_t rows = 0, cols = 0;
  for (const auto& p : parts) {
    g = g || needs_grad({&p});
    if (axis == 1) {
      if (rows == 0) rows = p.rows();
      if (p.rows() != rows) {
        throw ShapeError("concat: row count mismatch at " +
                         shape_to_string(p.shape()));
      }
      cols += p.cols();
    } else {
      if (cols == 0) cols = p.cols();
      if (p.cols() != cols) {
        throw ShapeError("concat: column count mismatch at " +
                         shape_to_string(p.shape()));
      }
      rows += p.rows();
    }
  }
  Tensor out = make({rows, cols}, g);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    if (axis == 1) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) {
          out[i * cols + offset + j] = p[i * p.cols() + j];
        }
      }
      offset += p.cols();
    } else {
      std::copy(p.value().begin(), p.value().end(),
                out.value().begin() + offset * cols);
      offset += p.rows();
    }
  }
  if (g) {
    std::vector<Tensor> ins(parts.begin(), parts.end());
    push([ins, out, axis, rows, cols]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      std::size_t off = 0;
      for (auto& p : ins) {
        const std::size_t pr = p.rows(), pc = p.cols();
        if (p.requires_grad()) {
          auto d = p.grad();
          for (std::size_t i = 0; i < pr; ++i) {
            for (std::size_t j = 0; j < pc; ++j) {
              d[i * pc + j] += axis == 1 ? dy[i * cols + off + j]
                                         : dy[(off + i) * cols + j];
            }
          }
        }
        off += axis == 1 ? pc : pr;
      }
      (void)rows;
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::slice_cols(const Tensor& a, std::size_t begin,
                               std::size_t count) {
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || begin + count > n) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     shape_to_string(a.shape()));
  }
  const bool g = needs_grad({&a});
  Tensor out = make({m, count}, g);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = a[i * n + begin + j];
  }
  if (g) {
    push([a, out, m, n, begin, count]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
          d[i * n + begin + j] += dy[i * count + j];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::embedding(const Tensor& table, std::size_t id) {
  const std::size_t width = table.cols();
  if (id >= table.rows()) {
    throw ShapeError("embedding: id " + std::to_string(id) +
                     " out of range for table " + shape_to_string(table.shape()));
  }
  const bool g = needs_grad({&table});
  Tensor out = make({1, width}, g);
  std::copy_n(table.value().begin() + id * width, width, out.value().begin());
  if (g) {
    push([table, out, id, width]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = table.grad();
      for (std::size_t j = 0; j < width; ++j) d[id * width + j] += dy[j];
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::mean_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const bool g = needs_grad({&a});
  Tensor out = make({1, n}, g);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j] += a[i * n + j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= T(m);
  if (g) {
    push([a, out, m, n]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] += dy[j] / T(m);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::sum(const Tensor& a) {
  const bool g = needs_grad({&a});
  Tensor out = make({1}, g);
  T s = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  out[0] = s;
  if (g) {
    push([a, out]() mutable {
      if (!out.has_grad()) return;
      const T dy = out.grad()[0];
      auto d = a.grad();
      for (auto& v : d) v += dy;
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::dropout(const Tensor& a, T rate, Rng& rng) {
  if (rate < T(0) || rate >= T(1)) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  }
  if (rate == T(0)) return a;
  const T keep = T(1) - rate;
  const bool g = needs_grad({&a});
  Tensor out = make(a.shape(), g);
  std::vector<T> mask(a.size());
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    mask[i] = uni(rng) < static_cast<double>(keep) ? T(1) / keep : T(0);
    out[i] = a[i] * mask[i];
  }
  if (g) {
    push([a, out, mask = std::move(mask)]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto d = a.grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * mask[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> Graph<T>::cross_entropy(const Tensor& logits,
                                  std::span<const std::int64_t> targets,
                                  std::span<const std::uint8_t> mask) {
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m || mask.size() != m) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets / " + std::to_string(mask.size()) +
                     " mask entries for logits " +
                     shape_to_string(logits.shape()));
  }
  for (auto t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= n) {
      throw std::out_of_range("cross_entropy: target id " + std::to_string(t) +
                              " outside [0, " + std::to_string(n) + ")");
    }
  }
  const bool g = needs_grad({&logits});
  Tensor out = make({1}, g);
  std::vector<T> probs(m * n);
  kernels::softmax_rows<T>(m, n, logits.value(), probs);
  T total = T(0);
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    const T* row = logits.value().data() + i * n;
    const T mx = *std::max_element(row, row + n);
    T lse = T(0);
    for (std::size_t j = 0; j < n; ++j) lse += std::exp(row[j] - mx);
    total -= row[targets[i]] - mx - std::log(lse);
  }
  out[0] = total;
  if (g) {
    std::vector<std::int64_t> tg(targets.begin(), targets.end());
    std::vector<std::uint8_t> mk(mask.begin(), mask.end());
    push([logits, out, m, n, probs = std::move(probs), tg = std::move(tg),
          mk = std::move(mk)]() mutable {
      if (!out.has_grad()) return;
      const T dy = out.grad()[0];
      auto d = logits.grad();
      for (std::size_t i = 0; i < m; ++i) {
        if (!mk[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
          const T onehot = static_cast<std::int64_t>(j) == tg[i] ? T(1) : T(0);
          d[i * n + j] += dy * (probs[i * n + j] - onehot);
        }
      }
    });
  }
  return out;
}

template <typename T>
void Graph<T>::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_to_string(loss.shape())
                                     : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw std::invalid_argument(
        "backward: loss does not depend on any tensor that requires a gradient");
  }
  Tensor seed = loss;
  seed.grad()[0] += T(1);
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  ops_.clear();
  ops_.shrink_to_fit();
}

template class Graph<float>;
template class Graph<double>;

}  // namespace refcap
