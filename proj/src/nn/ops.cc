// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mulan/error.h"
#include "mulan/simd/kernels.h"

namespace mulan::nn {
namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims matrix_dims(const Var& v, const char* op) {
  const Tensor& t = v.value();
  if (t.rank() > 2) {
    throw GraphError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
  return {t.rows(), t.cols()};
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw GraphError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

void require_same_tape(const Var& a, const Var& b, const char* op) {
  if (&a.tape() != &b.tape()) throw GraphError(std::string(op) + ": inputs on different tapes");
}

// Elementwise op whose local derivative depends on (x, y).
template <typename Fwd, typename Deriv>
Var elementwise(const char* op, Var x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  const int xi = x.id();
  return x.tape().record(op, std::move(out), {x}, [xi, deriv](Tape& t, int yi) {
    if (!t.requires_grad(xi)) return;
    const Tensor& xv = t.value(xi);
    const Tensor& yv = t.value(yi);
    const Tensor& gy = t.grad(yi);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * deriv(xv[i], yv[i]);
  });
}

void accumulate(Tensor& dst, const Tensor& src, double factor = 1.0) {
  simd::active().axpy(factor, src.raw(), dst.raw(), dst.size());
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Dims da = matrix_dims(a, "matmul");
  const Dims db = matrix_dims(b, "matmul");
  if (da.cols != db.rows) {
    throw GraphError("matmul: inner dimensions " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  const std::size_t m = da.rows, k = da.cols, n = db.cols;
  Tensor out = Tensor::matrix(m, n);
  simd::active().gemm_nn(m, n, k, a.value().raw(), b.value().raw(), out.raw());
  const int ai = a.id(), bi = b.id();
  return a.tape().record("matmul", std::move(out), {a, b}, [=](Tape& t, int yi) {
    const Tensor& gy = t.grad(yi);
    const auto& kern = simd::active();
    if (t.requires_grad(ai)) kern.gemm_nt(m, k, n, gy.raw(), t.value(bi).raw(), t.grad(ai).raw());
    if (t.requires_grad(bi)) kern.gemm_tn(m, n, k, t.value(ai).raw(), gy.raw(), t.grad(bi).raw());
  });
}

Var linear(Var x, Var weight, Var bias) {
  require_same_tape(x, weight, "linear");
  require_same_tape(x, bias, "linear");
  const Dims dx = matrix_dims(x, "linear");
  const Dims dw = matrix_dims(weight, "linear");
  if (dx.cols != dw.rows || bias.value().size() != dw.cols) {
    throw GraphError("linear: incompatible shapes x" + shape_string(x.shape()) + " W" +
                     shape_string(weight.shape()) + " b" + shape_string(bias.shape()));
  }
  const std::size_t m = dx.rows, k = dx.cols, n = dw.cols;
  Tensor out = Tensor::matrix(m, n);
  const double* b = bias.value().raw();
  for (std::size_t i = 0; i < m; ++i) std::copy(b, b + n, out.raw() + i * n);
  simd::active().gemm_nn(m, n, k, x.value().raw(), weight.value().raw(), out.raw());
  const int xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape().record("linear", std::move(out), {x, weight, bias}, [=](Tape& t, int yi) {
    const Tensor& gy = t.grad(yi);
    const auto& kern = simd::active();
    if (t.requires_grad(xi)) kern.gemm_nt(m, k, n, gy.raw(), t.value(wi).raw(), t.grad(xi).raw());
    if (t.requires_grad(wi)) kern.gemm_tn(m, n, k, t.value(xi).raw(), gy.raw(), t.grad(wi).raw());
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      for (std::size_t i = 0; i < m; ++i) kern.axpy(1.0, gy.raw() + i * n, gb.raw(), n);
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  accumulate(out, b.value());
  const int ai = a.id(), bi = b.id();
  return a.tape().record("add", std::move(out), {a, b}, [=](Tape& t, int yi) {
    const Tensor& gy = t.grad(yi);
    if (t.requires_grad(ai)) accumulate(t.grad(ai), gy);
    if (t.requires_grad(bi)) accumulate(t.grad(bi), gy);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  accumulate(out, b.value(), -1.0);
  const int ai = a.id(), bi = b.id();
  return a.tape().record("sub", std::move(out), {a, b}, [=](Tape& t, int yi) {
    const Tensor& gy = t.grad(yi);
    if (t.requires_grad(ai)) accumulate(t.grad(ai), gy);
    if (t.requires_grad(bi)) accumulate(t.grad(bi), gy, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  require_same_shape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const int ai = a.id(), bi = b.id();
  return a.tape().record("mul", std::move(out), {a, b}, [=](Tape& t, int yi) {
    const Tensor& gy = t.grad(yi);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad(ai);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var add_row(Var x, Var bias) {
  require_same_tape(x, bias, "add_row");
  const Dims d = matrix_dims(x, "add_row");
  if (bias.value().size() != d.cols) {
    throw GraphError("add_row: bias " + shape_string(bias.shape()) + " for rows of width " +
                     std::to_string(d.cols));
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < d.rows; ++i) {
    simd::active().axpy(1.0, bias.value().raw(), out.raw() + i * d.cols, d.cols);
  }
  const int xi = x.id(), bi = bias.id();
  return x.tape().record("add_row", std::move(out), {x, bias}, [=](Tape& t, int yi) {
    const Tensor& gy = t.grad(yi);
    if (t.requires_grad(xi)) accumulate(t.grad(xi), gy);
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      for (std::size_t i = 0; i < d.rows; ++i) {
        simd::active().axpy(1.0, gy.raw() + i * d.cols, gb.raw(), d.cols);
      }
    }
  });
}

Var scale(Var x, double factor) {
  return elementwise(
      "scale", x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const int xi = x.id();
  return x.tape().record("sum", Tensor::scalar(s), {x}, [=](Tape& t, int yi) {
    if (!t.requires_grad(xi)) return;
    const double g = t.grad(yi).item();
    for (double& v : t.grad(xi).data()) v += g;
  });
}

Var mean_rows(Var x) {
  const Dims d = matrix_dims(x, "mean_rows");
  Tensor out = Tensor::matrix(1, d.cols);
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) out[j] += xv.at(i, j);
  }
  const double inv = 1.0 / static_cast<double>(d.rows);
  for (double& v : out.data()) v *= inv;
  const int xi = x.id();
  return x.tape().record("mean_rows", std::move(out), {x}, [=](Tape& t, int yi) {
    if (!t.requires_grad(xi)) return;
    const Tensor& gy = t.grad(yi);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < d.rows; ++i) {
      simd::active().axpy(inv, gy.raw(), gx.raw() + i * d.cols, d.cols);
    }
  });
}

Var log(Var x) {
  return elementwise(
      "log", x, [](double v) { return std::log(v); },
      [](double xv, double) { return 1.0 / xv; });
}

Var exp(Var x) {
  return elementwise(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double yv) { return yv; });
}

Var gelu(Var x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return elementwise(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v, double) {
        return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
      });
}

Var softmax(Var x) {
  const Dims d = matrix_dims(x, "softmax");
  Tensor out = x.value();
  for (std::size_t i = 0; i < d.rows; ++i) {
    auto row = out.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  const int xi = x.id();
  return x.tape().record("softmax", std::move(out), {x}, [=](Tape& t, int yi) {
    if (!t.requires_grad(xi)) return;
    const Tensor& y = t.value(yi);
    const Tensor& gy = t.grad(yi);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < d.rows; ++i) {
      const double* yr = y.raw() + i * d.cols;
      const double* gr = gy.raw() + i * d.cols;
      const double inner = simd::active().dot(yr, gr, d.cols);
      double* out_r = gx.raw() + i * d.cols;
      for (std::size_t j = 0; j < d.cols; ++j) out_r[j] += yr[j] * (gr[j] - inner);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  require_same_tape(x, gain, "layer_norm");
  require_same_tape(x, bias, "layer_norm");
  const Dims d = matrix_dims(x, "layer_norm");
  if (gain.value().size() != d.cols || bias.value().size() != d.cols) {
    throw GraphError("layer_norm: gain/bias must have " + std::to_string(d.cols) + " entries");
  }
  const std::size_t n = d.cols;
  Tensor normed(x.value().shape());
  std::vector<double> rstd(d.rows);
  Tensor out(x.value().shape());
  const Tensor& xv = x.value();
  const Tensor& g = gain.value();
  const Tensor& b = bias.value();
  for (std::size_t i = 0; i < d.rows; ++i) {
    const double* xr = xv.raw() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(n);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (xr[j] - mean) * rstd[i];
      normed[i * n + j] = h;
      out[i * n + j] = h * g[j] + b[j];
    }
  }
  const int xi = x.id(), gi = gain.id(), bi = bias.id();
  return x.tape().record(
      "layer_norm", std::move(out), {x, gain, bias},
      [=, normed = std::move(normed), rstd = std::move(rstd)](Tape& t, int yi) {
        const Tensor& gy = t.grad(yi);
        const Tensor& gv = t.value(gi);
        if (t.requires_grad(gi)) {
          Tensor& gg = t.grad(gi);
          for (std::size_t i = 0; i < d.rows; ++i) {
            for (std::size_t j = 0; j < n; ++j) gg[j] += gy[i * n + j] * normed[i * n + j];
          }
        }
        if (t.requires_grad(bi)) {
          Tensor& gb = t.grad(bi);
          for (std::size_t i = 0; i < d.rows; ++i) {
            simd::active().axpy(1.0, gy.raw() + i * n, gb.raw(), n);
          }
        }
        if (t.requires_grad(xi)) {
          Tensor& gx = t.grad(xi);
          std::vector<double> dh(n);
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t i = 0; i < d.rows; ++i) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              dh[j] = gy[i * n + j] * gv[j];
              mean_dh += dh[j];
              mean_dh_h += dh[j] * normed[i * n + j];
            }
            mean_dh *= inv_n;
            mean_dh_h *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              gx[i * n + j] += rstd[i] * (dh[j] - mean_dh - normed[i * n + j] * mean_dh_h);
            }
          }
        }
      });
}

Var l2_normalize(Var x) {
  const Dims d = matrix_dims(x, "l2_normalize");
  Tensor out = x.value();
  std::vector<double> norms(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) {
    auto row = out.row(i);
    norms[i] = std::sqrt(simd::active().dot(row.data(), row.data(), d.cols));
    if (norms[i] == 0.0) {
      x.tape().note("l2_normalize: zero row " + std::to_string(i) + " left as zero");
      continue;
    }
    const double inv = 1.0 / norms[i];
    for (double& v : row) v *= inv;
  }
  const int xi = x.id();
  return x.tape().record(
      "l2_normalize", std::move(out), {x}, [=, norms = std::move(norms)](Tape& t, int yi) {
        if (!t.requires_grad(xi)) return;
        const Tensor& y = t.value(yi);
        const Tensor& gy = t.grad(yi);
        Tensor& gx = t.grad(xi);
        for (std::size_t i = 0; i < d.rows; ++i) {
          if (norms[i] == 0.0) continue;
          const double* yr = y.raw() + i * d.cols;
          const double* gr = gy.raw() + i * d.cols;
          const double inner = simd::active().dot(yr, gr, d.cols);
          const double inv = 1.0 / norms[i];
          double* out_r = gx.raw() + i * d.cols;
          for (std::size_t j = 0; j < d.cols; ++j) out_r[j] += (gr[j] - yr[j] * inner) * inv;
        }
      });
}

Var embedding(Var table, std::span<const int> ids) {
  const Dims d = matrix_dims(table, "embedding");
  Tensor out = Tensor::matrix(ids.size(), d.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= d.rows) {
      throw GraphError("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(d.rows) + " rows");
    }
    auto src = table.value().row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const int ti = table.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return table.tape().record(
      "embedding", std::move(out), {table}, [=, rows = std::move(rows)](Tape& t, int yi) {
        if (!t.requires_grad(ti)) return;
        const Tensor& gy = t.grad(yi);
        Tensor& gt = t.grad(ti);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          simd::active().axpy(1.0, gy.raw() + i * d.cols,
                              gt.raw() + static_cast<std::size_t>(rows[i]) * d.cols, d.cols);
        }
      });
}

Var concat_rows(Var top, Var bottom) {
  require_same_tape(top, bottom, "concat_rows");
  const Dims a = matrix_dims(top, "concat_rows");
  const Dims b = matrix_dims(bottom, "concat_rows");
  if (a.cols != b.cols) throw GraphError("concat_rows: column counts differ");
  Tensor out = Tensor::matrix(a.rows + b.rows, a.cols);
  std::copy(top.value().data().begin(), top.value().data().end(), out.raw());
  std::copy(bottom.value().data().begin(), bottom.value().data().end(),
            out.raw() + a.rows * a.cols);
  const int ti = top.id(), bi = bottom.id();
  return top.tape().record("concat_rows", std::move(out), {top, bottom}, [=](Tape& t, int yi) {
    const Tensor& gy = t.grad(yi);
    const auto& kern = simd::active();
    if (t.requires_grad(ti)) kern.axpy(1.0, gy.raw(), t.grad(ti).raw(), a.rows * a.cols);
    if (t.requires_grad(bi)) {
      kern.axpy(1.0, gy.raw() + a.rows * a.cols, t.grad(bi).raw(), b.rows * b.cols);
    }
  });
}

Var take_row(Var x, std::size_t row) {
  const Dims d = matrix_dims(x, "take_row");
  if (row >= d.rows) throw GraphError("take_row: row " + std::to_string(row) + " out of range");
  auto src = x.value().row(row);
  Tensor out(Shape{1, d.cols}, std::vector<double>(src.begin(), src.end()));
  const int xi = x.id();
  return x.tape().record("take_row", std::move(out), {x}, [=](Tape& t, int yi) {
    if (!t.requires_grad(xi)) return;
    simd::active().axpy(1.0, t.grad(yi).raw(), t.grad(xi).raw() + row * d.cols, d.cols);
  });
}

Var pick(Var x, std::size_t flat_index) {
  if (flat_index >= x.value().size()) throw GraphError("pick: index out of range");
  const int xi = x.id();
  return x.tape().record("pick", Tensor::scalar(x.value()[flat_index]), {x},
                         [=](Tape& t, int yi) {
                           if (t.requires_grad(xi)) t.grad(xi)[flat_index] += t.grad(yi).item();
                         });
}

Var masked_attention(Var qkv, std::size_t heads, std::span<const std::uint8_t> key_mask) {
  const Dims d = matrix_dims(qkv, "masked_attention");
  if (heads == 0 || d.cols % (3 * heads) != 0) {
    throw GraphError("masked_attention: width " + std::to_string(d.cols) +
                     " not divisible into 3 x " + std::to_string(heads) + " heads");
  }
  const std::size_t len = d.rows;
  if (!key_mask.empty() && key_mask.size() != len) {
    throw GraphError("masked_attention: mask length " + std::to_string(key_mask.size()) +
                     " for sequence of " + std::to_string(len));
  }
  const std::size_t hidden = d.cols / 3;
  const std::size_t dh = hidden / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<std::uint8_t> mask(key_mask.begin(), key_mask.end());
  if (mask.empty()) mask.assign(len, 1);

  const auto& kern = simd::active();
  const Tensor& src = qkv.value();
  // Gathers head h of block `part` (0 = Q, 1 = K, 2 = V) into a dense [len, dh].
  auto gather = [&](const Tensor& from, std::size_t part, std::size_t h) {
    std::vector<double> dst(len * dh);
    for (std::size_t i = 0; i < len; ++i) {
      const double* s = from.raw() + i * d.cols + part * hidden + h * dh;
      std::copy(s, s + dh, dst.data() + i * dh);
    }
    return dst;
  };

  Tensor out = Tensor::matrix(len, hidden);
  std::vector<double> probs(heads * len * len, 0.0);
  std::vector<double> head_out(len * dh);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::vector<double> q = gather(src, 0, h);
    const std::vector<double> k = gather(src, 1, h);
    const std::vector<double> v = gather(src, 2, h);
    double* p = probs.data() + h * len * len;
    kern.gemm_nt(len, len, dh, q.data(), k.data(), p);
    for (std::size_t i = 0; i < len; ++i) {
      double* row = p + i * len;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < len; ++j) {
        if (mask[j]) mx = std::max(mx, row[j] * scale_factor);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        row[j] = mask[j] ? std::exp(row[j] * scale_factor - mx) : 0.0;
        z += row[j];
      }
      if (z > 0.0) {
        const double inv = 1.0 / z;
        for (std::size_t j = 0; j < len; ++j) row[j] *= inv;
      }
    }
    std::fill(head_out.begin(), head_out.end(), 0.0);
    kern.gemm_nn(len, dh, len, p, v.data(), head_out.data());
    for (std::size_t i = 0; i < len; ++i) {
      std::copy(head_out.data() + i * dh, head_out.data() + (i + 1) * dh,
                out.raw() + i * hidden + h * dh);
    }
  }

  const int xi = qkv.id();
  return qkv.tape().record(
      "masked_attention", std::move(out), {qkv},
      [=, probs = std::move(probs)](Tape& t, int yi) {
        if (!t.requires_grad(xi)) return;
        const auto& kern = simd::active();
        const Tensor& src = t.value(xi);
        const Tensor& gy = t.grad(yi);
        Tensor& gx = t.grad(xi);
        std::vector<double> go(len * dh), gq(len * dh), gk(len * dh), gv(len * dh);
        std::vector<double> gp(len * len);
        for (std::size_t h = 0; h < heads; ++h) {
          const double* p = probs.data() + h * len * len;
          std::vector<double> q(len * dh), k(len * dh), v(len * dh);
          for (std::size_t i = 0; i < len; ++i) {
            const double* row = src.raw() + i * d.cols + h * dh;
            std::copy(row, row + dh, q.data() + i * dh);
            std::copy(row + hidden, row + hidden + dh, k.data() + i * dh);
            std::copy(row + 2 * hidden, row + 2 * hidden + dh, v.data() + i * dh);
            const double* g = gy.raw() + i * hidden + h * dh;
            std::copy(g, g + dh, go.data() + i * dh);
          }
          std::fill(gv.begin(), gv.end(), 0.0);
          kern.gemm_tn(len, dh, len, p, go.data(), gv.data());
          std::fill(gp.begin(), gp.end(), 0.0);
          kern.gemm_nt(len, len, dh, go.data(), v.data(), gp.data());
          for (std::size_t i = 0; i < len; ++i) {
            const double* pr = p + i * len;
            double* gr = gp.data() + i * len;
            const double inner = kern.dot(pr, gr, len);
            for (std::size_t j = 0; j < len; ++j) gr[j] = pr[j] * (gr[j] - inner) * scale_factor;
          }
          std::fill(gq.begin(), gq.end(), 0.0);
          kern.gemm_nn(len, dh, len, gp.data(), k.data(), gq.data());
          std::fill(gk.begin(), gk.end(), 0.0);
          kern.gemm_tn(len, dh, len, gp.data(), q.data(), gk.data());
          for (std::size_t i = 0; i < len; ++i) {
            double* row = gx.raw() + i * d.cols + h * dh;
            for (std::size_t c = 0; c < dh; ++c) {
              row[c] += gq[i * dh + c];
              row[hidden + c] += gk[i * dh + c];
              row[2 * hidden + c] += gv[i * dh + c];
            }
          }
        }
      });
}

}  // namespace mulan::nn
