#include "csi4/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "csi4/common/errors.hpp"

namespace csi4::ad {
namespace {

using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// For every flat index of `big`, the flat index of the element of `small`
// that broadcasts onto it.
std::vector<std::size_t> broadcast_index(const Shape& small, const Shape& big) {
  const std::size_t rb = big.size();
  const std::size_t rs = small.size();
  std::vector<std::size_t> stride(rb, 0);
  std::size_t st = 1;
  for (std::size_t k = 0; k < rs; ++k) {
    const std::size_t axs = rs - 1 - k;
    const std::size_t axb = rb - 1 - k;
    stride[axb] = small[axs] == 1 ? 0 : st;
    st *= small[axs];
  }
  const std::size_t n = numel(big);
  std::vector<std::size_t> out(n);
  std::vector<std::size_t> coord(rb, 0);
  std::size_t cur = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = cur;
    for (std::size_t ax = rb; ax-- > 0;) {
      ++coord[ax];
      cur += stride[ax];
      if (coord[ax] < big[ax]) break;
      cur -= stride[ax] * big[ax];
      coord[ax] = 0;
    }
  }
  return out;
}

bool is_trailing(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

// How operand elements map onto the output of a broadcast binary op.
struct OperandMap {
  enum class Kind { same, scalar, trailing, general } kind = Kind::same;
  std::size_t period = 0;
  std::vector<std::size_t> index;

  OperandMap(const Shape& s, const Shape& out) {
    if (s == out) {
      kind = Kind::same;
    } else if (numel(s) == 1) {
      kind = Kind::scalar;
    } else if (is_trailing(s, out)) {
      kind = Kind::trailing;
      period = numel(s);
    } else {
      kind = Kind::general;
      index = broadcast_index(s, out);
    }
  }
  std::size_t operator()(std::size_t i) const {
    switch (kind) {
      case Kind::same: return i;
      case Kind::scalar: return 0;
      case Kind::trailing: return i % period;
      case Kind::general: return index[i];
    }
    return i;
  }
};

template <typename F>
Tensor binary_kernel(const Tensor& a, const Tensor& b, F f) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  Tensor out(out_shape);
  const auto pa = a.data();
  const auto pb = b.data();
  auto po = out.data();
  const std::size_t n = out.size();
  if (a.shape() == out_shape && b.shape() == out_shape) {
    for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
    return out;
  }
  const OperandMap ma(a.shape(), out_shape);
  const OperandMap mb(b.shape(), out_shape);
  for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[ma(i)], pb[mb(i)]);
  return out;
}

template <typename F>
Tensor unary_kernel(const Tensor& a, F f) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = f(pa[i]);
  return out;
}

Var reduce_grad(const Var& g, const Shape& shape) {
  return g.shape() == shape ? g : sum_to(g, shape);
}

void require_rank(const Var& a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw DimensionError(std::string(op) + " expects rank " + std::to_string(rank) +
                         ", got shape " + to_string(a.shape()));
  }
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("shapes " + to_string(a) + " and " + to_string(b) +
                           " are not broadcastable");
    }
    out[r - 1 - k] = da == 1 ? db : da;
  }
  return out;
}

Var add(const Var& a, const Var& b) {
  Tensor v = binary_kernel(a.value(), b.value(), [](float x, float y) { return x + y; });
  return a.graph().record(std::move(v), {a, b}, [a, b](const Var&, const Var& g) {
    return std::vector<Var>{reduce_grad(g, a.shape()), reduce_grad(g, b.shape())};
  });
}

Var sub(const Var& a, const Var& b) {
  Tensor v = binary_kernel(a.value(), b.value(), [](float x, float y) { return x - y; });
  return a.graph().record(std::move(v), {a, b}, [a, b](const Var&, const Var& g) {
    return std::vector<Var>{reduce_grad(g, a.shape()), reduce_grad(neg(g), b.shape())};
  });
}

Var mul(const Var& a, const Var& b) {
  Tensor v = binary_kernel(a.value(), b.value(), [](float x, float y) { return x * y; });
  return a.graph().record(std::move(v), {a, b}, [a, b](const Var&, const Var& g) {
    Var ga, gb;
    if (a.requires_grad()) ga = reduce_grad(mul(g, b), a.shape());
    if (b.requires_grad()) gb = reduce_grad(mul(g, a), b.shape());
    return std::vector<Var>{ga, gb};
  });
}

Var div(const Var& a, const Var& b) {
  Tensor v = binary_kernel(a.value(), b.value(), [](float x, float y) { return x / y; });
  return a.graph().record(std::move(v), {a, b}, [a, b](const Var& out, const Var& g) {
    Var ga, gb;
    if (a.requires_grad()) ga = reduce_grad(div(g, b), a.shape());
    if (b.requires_grad()) gb = reduce_grad(neg(div(mul(g, out), b)), b.shape());
    return std::vector<Var>{ga, gb};
  });
}

Var square(const Var& a) { return mul(a, a); }

Var neg(const Var& a) { return scale(a, -1.0f); }

Var scale(const Var& a, float factor) {
  Tensor v = unary_kernel(a.value(), [factor](float x) { return x * factor; });
  return a.graph().record(std::move(v), {a}, [factor](const Var&, const Var& g) {
    return std::vector<Var>{scale(g, factor)};
  });
}

Var add_scalar(const Var& a, float offset) {
  Tensor v = unary_kernel(a.value(), [offset](float x) { return x + offset; });
  return a.graph().record(std::move(v), {a}, [](const Var&, const Var& g) {
    return std::vector<Var>{g};
  });
}

Var sqrt(const Var& a) {
  Tensor v = unary_kernel(a.value(), [](float x) { return std::sqrt(x); });
  return a.graph().record(std::move(v), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{div(scale(g, 0.5f), out)};
  });
}

Var log(const Var& a) {
  Tensor v = unary_kernel(a.value(), [](float x) { return std::log(x); });
  return a.graph().record(std::move(v), {a}, [a](const Var&, const Var& g) {
    return std::vector<Var>{div(g, a)};
  });
}

Var exp(const Var& a) {
  Tensor v = unary_kernel(a.value(), [](float x) { return std::exp(x); });
  return a.graph().record(std::move(v), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{mul(g, out)};
  });
}

Var tanh(const Var& a) {
  Tensor v = unary_kernel(a.value(), [](float x) { return std::tanh(x); });
  return a.graph().record(std::move(v), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{mul(g, add_scalar(neg(square(out)), 1.0f))};
  });
}

Var sigmoid(const Var& a) {
  Tensor v = unary_kernel(a.value(), [](float x) {
    // Split on sign so exp never overflows.
    if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
    const float e = std::exp(x);
    return e / (1.0f + e);
  });
  return a.graph().record(std::move(v), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{mul(g, mul(out, add_scalar(neg(out), 1.0f)))};
  });
}

Var leaky_relu(const Var& a, float slope) {
  Tensor v = unary_kernel(a.value(), [slope](float x) { return x >= 0.0f ? x : slope * x; });
  return a.graph().record(std::move(v), {a}, [a, slope](const Var&, const Var& g) {
    // The mask is piecewise constant, so treating it as a constant is exact
    // away from 0 for any derivative order.
    Tensor mask = unary_kernel(a.value(), [slope](float x) { return x >= 0.0f ? 1.0f : slope; });
    return std::vector<Var>{mul_constant(g, std::move(mask))};
  });
}

Var relu(const Var& a) { return leaky_relu(a, 0.0f); }

Var clamp(const Var& a, float lo, float hi) {
  Tensor v = unary_kernel(a.value(), [lo, hi](float x) { return std::clamp(x, lo, hi); });
  return a.graph().record(std::move(v), {a}, [a, lo, hi](const Var&, const Var& g) {
    Tensor mask =
        unary_kernel(a.value(), [lo, hi](float x) { return (x >= lo && x <= hi) ? 1.0f : 0.0f; });
    return std::vector<Var>{mul_constant(g, std::move(mask))};
  });
}

Var matmul(const Var& a, const Var& b, bool transpose_a, bool transpose_b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = transpose_a ? av.dim(1) : av.dim(0);
  const std::size_t ka = transpose_a ? av.dim(0) : av.dim(1);
  const std::size_t kb = transpose_b ? bv.dim(1) : bv.dim(0);
  const std::size_t n = transpose_b ? bv.dim(0) : bv.dim(1);
  if (ka != kb) {
    throw DimensionError("matmul inner dimensions disagree: " + to_string(av.shape()) +
                         (transpose_a ? "^T" : "") + " x " + to_string(bv.shape()) +
                         (transpose_b ? "^T" : ""));
  }
  Tensor out(Shape{m, n});
  Eigen::Map<const RowMajor> A(av.data().data(), static_cast<Eigen::Index>(av.dim(0)),
                               static_cast<Eigen::Index>(av.dim(1)));
  Eigen::Map<const RowMajor> B(bv.data().data(), static_cast<Eigen::Index>(bv.dim(0)),
                               static_cast<Eigen::Index>(bv.dim(1)));
  Eigen::Map<RowMajor> C(out.data().data(), static_cast<Eigen::Index>(m),
                         static_cast<Eigen::Index>(n));
  if (ka == 0) {
    C.setZero();
  } else if (!transpose_a && !transpose_b) {
    C.noalias() = A * B;
  } else if (!transpose_a && transpose_b) {
    C.noalias() = A * B.transpose();
  } else if (transpose_a && !transpose_b) {
    C.noalias() = A.transpose() * B;
  } else {
    C.noalias() = A.transpose() * B.transpose();
  }
  return a.graph().record(
      std::move(out), {a, b}, [a, b, transpose_a, transpose_b](const Var&, const Var& g) {
        Var ga, gb;
        const bool need_a = a.requires_grad();
        const bool need_b = b.requires_grad();
        if (!transpose_a && !transpose_b) {
          if (need_a) ga = matmul(g, b, false, true);
          if (need_b) gb = matmul(a, g, true, false);
        } else if (!transpose_a && transpose_b) {
          if (need_a) ga = matmul(g, b, false, false);
          if (need_b) gb = matmul(g, a, true, false);
        } else if (transpose_a && !transpose_b) {
          if (need_a) ga = matmul(b, g, false, true);
          if (need_b) gb = matmul(a, g, false, false);
        } else {
          if (need_a) ga = matmul(b, g, true, true);
          if (need_b) gb = matmul(g, a, true, true);
        }
        return std::vector<Var>{ga, gb};
      });
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (float x : a.value().data()) acc += x;
  return a.graph().record(Tensor::scalar(static_cast<float>(acc)), {a},
                          [a](const Var&, const Var& g) {
                            return std::vector<Var>{broadcast_to(g, a.shape())};
                          });
}

Var mean(const Var& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), 1.0f / static_cast<float>(n));
}

Var sum(const Var& a, std::size_t axis) {
  const Shape& s = a.shape();
  if (axis >= s.size()) {
    throw DimensionError("reduction axis " + std::to_string(axis) + " invalid for shape " +
                         to_string(s));
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= s[k];
  for (std::size_t k = axis + 1; k < s.size(); ++k) inner *= s[k];
  const std::size_t n = s[axis];
  Shape out_shape = s;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> acc(outer * inner, 0.0);
  const auto pa = a.value().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < n; ++k) {
      const float* row = pa.data() + (o * n + k) * inner;
      double* dst = acc.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += row[i];
    }
  }
  Tensor out(out_shape);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return a.graph().record(std::move(out), {a}, [a, axis](const Var&, const Var& g) {
    Shape keep = a.shape();
    keep[axis] = 1;
    return std::vector<Var>{broadcast_to(reshape(g, keep), a.shape())};
  });
}

Var mean(const Var& a, std::size_t axis) {
  if (axis >= a.value().rank()) {
    throw DimensionError("reduction axis " + std::to_string(axis) + " invalid for shape " +
                         to_string(a.shape()));
  }
  const std::size_t n = a.shape()[axis];
  if (n == 0) throw ContractError("mean over an empty axis");
  return scale(sum(a, axis), 1.0f / static_cast<float>(n));
}

Var reshape(const Var& a, Shape shape) {
  Tensor v = a.value().reshaped(std::move(shape));
  return a.graph().record(std::move(v), {a}, [a](const Var&, const Var& g) {
    return std::vector<Var>{reshape(g, a.shape())};
  });
}

Var broadcast_to(const Var& a, const Shape& shape) {
  if (a.shape() == shape) return a;
  if (broadcast_shape(a.shape(), shape) != shape) {
    throw DimensionError("cannot broadcast " + to_string(a.shape()) + " to " + to_string(shape));
  }
  const OperandMap map(a.shape(), shape);
  Tensor out(shape);
  const auto pa = a.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[map(i)];
  return a.graph().record(std::move(out), {a}, [a](const Var&, const Var& g) {
    return std::vector<Var>{sum_to(g, a.shape())};
  });
}

Var sum_to(const Var& a, const Shape& shape) {
  if (a.shape() == shape) return a;
  if (broadcast_shape(shape, a.shape()) != a.shape()) {
    throw DimensionError("cannot sum " + to_string(a.shape()) + " down to " + to_string(shape));
  }
  const OperandMap map(shape, a.shape());
  std::vector<double> acc(numel(shape), 0.0);
  const auto pa = a.value().data();
  for (std::size_t i = 0; i < pa.size(); ++i) acc[map(i)] += pa[i];
  Tensor out(shape);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return a.graph().record(std::move(out), {a}, [a](const Var&, const Var& g) {
    return std::vector<Var>{broadcast_to(g, a.shape())};
  });
}

Var concat_cols(const Var& a, const Var& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const std::size_t m = a.shape()[0];
  if (b.shape()[0] != m) {
    throw DimensionError("concat_cols row counts differ: " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  const std::size_t p = a.shape()[1];
  const std::size_t q = b.shape()[1];
  Tensor out(Shape{m, p + q});
  const auto pa = a.value().data();
  const auto pb = b.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(pa.begin() + static_cast<std::ptrdiff_t>(r * p), p,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * (p + q)));
    std::copy_n(pb.begin() + static_cast<std::ptrdiff_t>(r * q), q,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * (p + q) + p));
  }
  return a.graph().record(std::move(out), {a, b}, [p, q](const Var&, const Var& g) {
    return std::vector<Var>{slice_cols(g, 0, p), slice_cols(g, p, q)};
  });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t count) {
  require_rank(a, 2, "slice_cols");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  if (start + count > n) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " +
                         to_string(a.shape()));
  }
  Tensor out(Shape{m, count});
  const auto pa = a.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(pa.begin() + static_cast<std::ptrdiff_t>(r * n + start), count,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  return a.graph().record(std::move(out), {a}, [start, n](const Var&, const Var& g) {
    return std::vector<Var>{pad_cols(g, start, n)};
  });
}

Var pad_cols(const Var& a, std::size_t start, std::size_t total) {
  require_rank(a, 2, "pad_cols");
  const std::size_t m = a.shape()[0];
  const std::size_t count = a.shape()[1];
  if (start + count > total) throw DimensionError("pad_cols target too narrow");
  Tensor out(Shape{m, total});
  const auto pa = a.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(pa.begin() + static_cast<std::ptrdiff_t>(r * count), count,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * total + start));
  }
  return a.graph().record(std::move(out), {a}, [start, count](const Var&, const Var& g) {
    return std::vector<Var>{slice_cols(g, start, count)};
  });
}

Var gather_rows(const Var& table, std::span<const int> indices) {
  require_rank(table, 2, "gather_rows");
  const std::size_t rows = table.shape()[0];
  const std::size_t width = table.shape()[1];
  auto idx = std::make_shared<std::vector<int>>(indices.begin(), indices.end());
  Tensor out(Shape{idx->size(), width});
  const auto pt = table.value().data();
  for (std::size_t r = 0; r < idx->size(); ++r) {
    const int k = (*idx)[r];
    if (k < 0 || static_cast<std::size_t>(k) >= rows) {
      throw DataError("index " + std::to_string(k) + " outside [0, " + std::to_string(rows) + ")");
    }
    std::copy_n(pt.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * width),
                width, out.data().begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return table.graph().record(std::move(out), {table}, [idx, rows](const Var&, const Var& g) {
    return std::vector<Var>{scatter_rows(g, *idx, rows)};
  });
}

Var scatter_rows(const Var& a, std::span<const int> indices, std::size_t num_rows) {
  require_rank(a, 2, "scatter_rows");
  const std::size_t width = a.shape()[1];
  if (indices.size() != a.shape()[0]) throw DimensionError("scatter_rows index count mismatch");
  auto idx = std::make_shared<std::vector<int>>(indices.begin(), indices.end());
  std::vector<double> acc(num_rows * width, 0.0);
  const auto pa = a.value().data();
  for (std::size_t r = 0; r < idx->size(); ++r) {
    const int k = (*idx)[r];
    if (k < 0 || static_cast<std::size_t>(k) >= num_rows) {
      throw DataError("index " + std::to_string(k) + " outside [0, " + std::to_string(num_rows) +
                      ")");
    }
    for (std::size_t c = 0; c < width; ++c) {
      acc[static_cast<std::size_t>(k) * width + c] += pa[r * width + c];
    }
  }
  Tensor out(Shape{num_rows, width});
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return a.graph().record(std::move(out), {a}, [idx](const Var&, const Var& g) {
    return std::vector<Var>{gather_rows(g, *idx)};
  });
}

Var gather_flat(const Var& a, IndexMap index, Shape out_shape) {
  if (numel(out_shape) != index->size()) {
    throw DimensionError("gather_flat index size does not match output shape " +
                         to_string(out_shape));
  }
  const auto pa = a.value().data();
  Tensor out(std::move(out_shape));
  for (std::size_t i = 0; i < index->size(); ++i) {
    const std::int64_t k = (*index)[i];
    out[i] = k < 0 ? 0.0f : pa[static_cast<std::size_t>(k)];
  }
  return a.graph().record(std::move(out), {a}, [a, index](const Var&, const Var& g) {
    return std::vector<Var>{scatter_flat(g, index, a.shape())};
  });
}

Var scatter_flat(const Var& a, IndexMap index, Shape in_shape) {
  if (a.value().size() != index->size()) {
    throw DimensionError("scatter_flat index size does not match " + to_string(a.shape()));
  }
  std::vector<double> acc(numel(in_shape), 0.0);
  const auto pa = a.value().data();
  for (std::size_t i = 0; i < index->size(); ++i) {
    const std::int64_t k = (*index)[i];
    if (k >= 0) acc[static_cast<std::size_t>(k)] += pa[i];
  }
  Tensor out(std::move(in_shape));
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return a.graph().record(std::move(out), {a}, [a, index](const Var&, const Var& g) {
    return std::vector<Var>{gather_flat(g, index, a.shape())};
  });
}

Var detach(const Var& a) { return a.graph().constant(a.value()); }

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::size_t m = logits.shape()[0];
  const std::size_t k = logits.shape()[1];
  if (labels.size() != m) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(m) + " rows");
  }
  if (m == 0) throw ContractError("softmax_cross_entropy on an empty batch");
  const auto pl = logits.value().data();
  Tensor probs(Shape{m, k});
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    }
    const float* row = pl.data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(static_cast<double>(row[c]) - mx);
    const double log_z = std::log(z) + mx;
    total += log_z - static_cast<double>(row[static_cast<std::size_t>(y)]);
    for (std::size_t c = 0; c < k; ++c) {
      double p = std::exp(static_cast<double>(row[c]) - log_z);
      if (c == static_cast<std::size_t>(y)) p -= 1.0;
      probs.at(r, c) = static_cast<float>(p / static_cast<double>(m));
    }
  }
  auto grad_table = std::make_shared<Tensor>(std::move(probs));
  return logits.graph().record(
      Tensor::scalar(static_cast<float>(total / static_cast<double>(m))), {logits},
      [grad_table](const Var&, const Var& g) {
        return std::vector<Var>{mul_constant(broadcast_to(g, grad_table->shape()), *grad_table)};
      },
      /*second_order_ok=*/false);
}

Var mul_constant(const Var& a, Tensor mask) { return mul(a, a.graph().constant(std::move(mask))); }

}  // namespace csi4::ad
