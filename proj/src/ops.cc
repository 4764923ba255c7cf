// src/ops.cc

// Copyright 2026  The EEND-Aux Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "eend/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "eend/error.h"
#include "eend/kernels.h"

namespace eend {
namespace {

Graph& same_graph(const Var& a, const Var& b) {
  if (&a.graph() != &b.graph())
    throw Error("op inputs belong to different graphs");
  return a.graph();
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

// Elementwise op whose local derivative depends on (input, output) only.
template <typename Forward, typename Derivative>
Var unary(const Var& x, OpKind kind, Forward forward, Derivative derivative) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = forward(xv[i]);
  const std::size_t in = x.id();
  return x.graph().record(
      kind, {in}, std::move(out),
      [in, derivative](Graph& g, std::size_t self) {
        if (!g.needs_grad(in)) return;
        const Tensor& xv = g.value(in);
        const Tensor& yv = g.value(self);
        std::span<const double> gy = std::as_const(g).grad(self);
        std::span<double> gx = g.grad(in);
        for (std::size_t i = 0; i < gx.size(); ++i)
          gx[i] += gy[i] * derivative(xv[i], yv[i]);
      });
}

}  // namespace

double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

double bce(double target, double pred) {
  const double p = clamp_prob(pred);
  // binary targets need one log; the dropped term is exactly zero
  if (target == 0.0) return -std::log(1.0 - p);
  if (target == 1.0) return -std::log(p);
  return -target * std::log(p) - (1.0 - target) * std::log(1.0 - p);
}

double bce_mean_value(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "bce_mean");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += bce(target[i], pred[i]);
  return total / static_cast<double>(pred.size());
}

double mse_mean_value(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_mean");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = target[i] - pred[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

Tensor matmul_value(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner extents differ " +
                         shape_string(a.shape()) + " * " +
                         shape_string(b.shape()));
  Tensor out({a.rows(), b.cols()});
  kernels::active().gemm_nn(a.rows(), a.cols(), b.cols(), a.ptr(), b.ptr(),
                            out.ptr(), false);
  return out;
}

Var matmul(const Var& a, const Var& b) {
  Graph& graph = same_graph(a, b);
  Tensor out = matmul_value(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return graph.record(
      OpKind::kMatmul, {ia, ib}, std::move(out),
      [ia, ib](Graph& g, std::size_t self) {
        const Tensor& av = g.value(ia);
        const Tensor& bv = g.value(ib);
        const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
        const double* gy = std::as_const(g).grad(self).data();
        const auto& kt = kernels::active();
        // da = dy * b^T, db = a^T * dy
        if (g.needs_grad(ia)) kt.gemm_nt(m, n, k, gy, bv.ptr(), g.grad(ia).data(), true);
        if (g.needs_grad(ib)) kt.gemm_tn(m, k, n, av.ptr(), gy, g.grad(ib).data(), true);
      });
}

Var matmul_nt(const Var& a, const Var& b) {
  Graph& graph = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul_nt");
  require_matrix(bv, "matmul_nt");
  if (av.cols() != bv.cols())
    throw DimensionError("matmul_nt: inner extents differ " +
                         shape_string(av.shape()) + " * " +
                         shape_string(bv.shape()) + "^T");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor out({m, n});
  kernels::active().gemm_nt(m, k, n, av.ptr(), bv.ptr(), out.ptr(), false);
  const std::size_t ia = a.id(), ib = b.id();
  return graph.record(
      OpKind::kMatmulNT, {ia, ib}, std::move(out),
      [ia, ib, m, k, n](Graph& g, std::size_t self) {
        const double* gy = std::as_const(g).grad(self).data();
        const auto& kt = kernels::active();
        // y = a b^T: da = dy * b, db = dy^T * a
        if (g.needs_grad(ia))
          kt.gemm_nn(m, n, k, gy, g.value(ib).ptr(), g.grad(ia).data(), true);
        if (g.needs_grad(ib))
          kt.gemm_tn(m, n, k, gy, g.value(ia).ptr(), g.grad(ib).data(), true);
      });
}

Var transpose(const Var& x) {
  require_matrix(x.value(), "transpose");
  const std::size_t in = x.id();
  return x.graph().record(OpKind::kTranspose, {in}, x.value().transposed(),
                          [in](Graph& g, std::size_t self) {
                            if (!g.needs_grad(in)) return;
                            const Tensor& yv = g.value(self);
                            const std::size_t r = yv.rows(), c = yv.cols();
                            std::span<const double> gy = std::as_const(g).grad(self);
                            std::span<double> gx = g.grad(in);
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j)
                                gx[j * r + i] += gy[i * c + j];
                          });
}

Var add(const Var& a, const Var& b) {
  Graph& graph = same_graph(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out.set_requires_grad(false);
  kernels::active().axpy(out.size(), 1.0, b.value().ptr(), out.ptr());
  const std::size_t ia = a.id(), ib = b.id();
  return graph.record(OpKind::kAdd, {ia, ib}, std::move(out),
                      [ia, ib](Graph& g, std::size_t self) {
                        std::span<const double> gy = std::as_const(g).grad(self);
                        for (std::size_t in : {ia, ib}) {
                          if (!g.needs_grad(in)) continue;
                          kernels::active().axpy(gy.size(), 1.0, gy.data(),
                                                 g.grad(in).data());
                        }
                      });
}

Var sub(const Var& a, const Var& b) {
  Graph& graph = same_graph(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  out.set_requires_grad(false);
  kernels::active().axpy(out.size(), -1.0, b.value().ptr(), out.ptr());
  const std::size_t ia = a.id(), ib = b.id();
  return graph.record(OpKind::kSub, {ia, ib}, std::move(out),
                      [ia, ib](Graph& g, std::size_t self) {
                        std::span<const double> gy = std::as_const(g).grad(self);
                        if (g.needs_grad(ia))
                          kernels::active().axpy(gy.size(), 1.0, gy.data(),
                                                 g.grad(ia).data());
                        if (g.needs_grad(ib))
                          kernels::active().axpy(gy.size(), -1.0, gy.data(),
                                                 g.grad(ib).data());
                      });
}

Var mul(const Var& a, const Var& b) {
  Graph& graph = same_graph(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return graph.record(OpKind::kMul, {ia, ib}, std::move(out),
                      [ia, ib](Graph& g, std::size_t self) {
                        std::span<const double> gy = std::as_const(g).grad(self);
                        const Tensor& av = g.value(ia);
                        const Tensor& bv = g.value(ib);
                        if (g.needs_grad(ia)) {
                          std::span<double> ga = g.grad(ia);
                          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
                        }
                        if (g.needs_grad(ib)) {
                          std::span<double> gb = g.grad(ib);
                          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
                        }
                      });
}

Var add_row(const Var& x, const Var& row) {
  Graph& graph = same_graph(x, row);
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  require_matrix(xv, "add_row");
  if (rv.size() != xv.cols() || rv.rows() != 1)
    throw DimensionError("add_row: row " + shape_string(rv.shape()) +
                         " does not match matrix " + shape_string(xv.shape()));
  Tensor out = xv;
  out.set_requires_grad(false);
  const std::size_t m = xv.rows(), n = xv.cols();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += rv[j];
  const std::size_t ix = x.id(), ir = row.id();
  return graph.record(OpKind::kAddRow, {ix, ir}, std::move(out),
                      [ix, ir, m, n](Graph& g, std::size_t self) {
                        std::span<const double> gy = std::as_const(g).grad(self);
                        if (g.needs_grad(ix))
                          kernels::active().axpy(gy.size(), 1.0, gy.data(),
                                                 g.grad(ix).data());
                        if (g.needs_grad(ir)) {
                          std::span<double> gr = g.grad(ir);
                          for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) gr[j] += gy[i * n + j];
                        }
                      });
}

Var scale(const Var& x, double factor) {
  return unary(
      x, OpKind::kScale, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Var relu(const Var& x) {
  return unary(
      x, OpKind::kRelu, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(
      x, OpKind::kSigmoid,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var log(const Var& x) {
  for (double v : x.value().data())
    if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
  return unary(
      x, OpKind::kLog, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Var square(const Var& x) {
  return unary(
      x, OpKind::kSquare, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Var elementwise(Elementwise kind, const Var& x, const Var* other,
                double factor) {
  switch (kind) {
    case Elementwise::kRelu: return relu(x);
    case Elementwise::kSigmoid: return sigmoid(x);
    case Elementwise::kAdd:
      if (other == nullptr) throw Error("elementwise add needs a second operand");
      return add(x, *other);
    case Elementwise::kScale: return scale(x, factor);
    case Elementwise::kLog: return log(x);
    case Elementwise::kSquare: return square(x);
  }
  throw Error("unknown elementwise kind");
}

Var softmax_rows(const Var& x) {
  const Tensor& xv = x.value();
  require_matrix(xv, "softmax_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.ptr() + i * n;
    double* dst = out.ptr() + i * n;
    const double peak = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dst[j] = std::exp(row[j] - peak);
      total += dst[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < n; ++j) dst[j] *= inv;
  }
  const std::size_t in = x.id();
  return x.graph().record(
      OpKind::kSoftmaxRows, {in}, std::move(out),
      [in, m, n](Graph& g, std::size_t self) {
        if (!g.needs_grad(in)) return;
        const Tensor& y = g.value(self);
        std::span<const double> gy = std::as_const(g).grad(self);
        std::span<double> gx = g.grad(in);
        const auto& kt = kernels::active();
        for (std::size_t i = 0; i < m; ++i) {
          const double* yr = y.ptr() + i * n;
          const double* gr = gy.data() + i * n;
          const double inner = kt.dot(n, yr, gr);
          double* dst = gx.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) dst[j] += yr[j] * (gr[j] - inner);
        }
      });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  Graph& graph = same_graph(x, gain);
  same_graph(x, bias);
  const Tensor& xv = x.value();
  require_matrix(xv, "layer_norm");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (n < 2) throw DimensionError("layer_norm: need at least 2 features");
  if (gain.value().size() != n || bias.value().size() != n)
    throw DimensionError("layer_norm: gain/bias must have " + std::to_string(n) +
                         " entries");
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  // normalized rows and per-row inverse std are kept for backward
  Tensor normalized({m, n});
  std::vector<double> inv_std(m);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.ptr() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double z = (row[j] - mu) * inv_std[i];
      normalized[i * n + j] = z;
      out[i * n + j] = gv[j] * z + bv[j];
    }
  }
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return graph.record(
      OpKind::kLayerNorm, {ix, ig, ib}, std::move(out),
      [ix, ig, ib, m, n, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
        std::span<const double> gy = std::as_const(g).grad(self);
        if (g.needs_grad(ig)) {
          std::span<double> gg = g.grad(ig);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
              gg[j] += gy[i * n + j] * normalized[i * n + j];
        }
        if (g.needs_grad(ib)) {
          std::span<double> gb = g.grad(ib);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += gy[i * n + j];
        }
        if (!g.needs_grad(ix)) return;
        const Tensor& gv = g.value(ig);
        std::span<double> gx = g.grad(ix);
        const double inv_n = 1.0 / static_cast<double>(n);
        std::vector<double> dz(n);
        for (std::size_t i = 0; i < m; ++i) {
          double mean_dz = 0.0, mean_dz_z = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            dz[j] = gy[i * n + j] * gv[j];
            mean_dz += dz[j];
            mean_dz_z += dz[j] * normalized[i * n + j];
          }
          mean_dz *= inv_n;
          mean_dz_z *= inv_n;
          for (std::size_t j = 0; j < n; ++j)
            gx[i * n + j] += inv_std[i] *
                             (dz[j] - mean_dz - normalized[i * n + j] * mean_dz_z);
        }
      });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t in = x.id();
  return x.graph().record(OpKind::kSum, {in}, Tensor({1}, {total}),
                          [in](Graph& g, std::size_t self) {
                            if (!g.needs_grad(in)) return;
                            const double gy = std::as_const(g).grad(self)[0];
                            for (double& v : g.grad(in)) v += gy;
                          });
}

Var mean(const Var& x) {
  const double count = static_cast<double>(x.value().size());
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t in = x.id();
  return x.graph().record(OpKind::kMean, {in}, Tensor({1}, {total / count}),
                          [in, count](Graph& g, std::size_t self) {
                            if (!g.needs_grad(in)) return;
                            const double gy = std::as_const(g).grad(self)[0] / count;
                            for (double& v : g.grad(in)) v += gy;
                          });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_cols");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (count == 0 || begin + count > n)
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         std::to_string(n) + " columns");
  Tensor out({m, count});
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(xv.ptr() + i * n + begin, count, out.ptr() + i * count);
  const std::size_t in = x.id();
  return x.graph().record(
      OpKind::kSliceCols, {in}, std::move(out),
      [in, m, n, begin, count](Graph& g, std::size_t self) {
        if (!g.needs_grad(in)) return;
        std::span<const double> gy = std::as_const(g).grad(self);
        std::span<double> gx = g.grad(in);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < count; ++j)
            gx[i * n + begin + j] += gy[i * count + j];
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Graph& graph = parts.front().graph();
  const std::size_t m = parts.front().value().rows();
  std::vector<std::size_t> ids, widths;
  std::size_t n = 0;
  for (const Var& p : parts) {
    same_graph(parts.front(), p);
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != m)
      throw DimensionError("concat_cols: row counts differ");
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
    n += widths.back();
  }
  Tensor out({m, n});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(pv.ptr() + i * widths[k], widths[k], out.ptr() + i * n + offset);
    offset += widths[k];
  }
  return graph.record(OpKind::kConcatCols, ids, std::move(out),
                      [ids, widths, m, n](Graph& g, std::size_t self) {
                        std::span<const double> gy = std::as_const(g).grad(self);
                        std::size_t offset = 0;
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                          if (g.needs_grad(ids[k])) {
                            std::span<double> gx = g.grad(ids[k]);
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < widths[k]; ++j)
                                gx[i * widths[k] + j] += gy[i * n + offset + j];
                          }
                          offset += widths[k];
                        }
                      });
}

Var bce_mean(const Var& pred, const Tensor& target) {
  const double value = bce_mean_value(pred.value(), target);
  const std::size_t in = pred.id();
  return pred.graph().record(
      OpKind::kBceMean, {in}, Tensor({1}, {value}),
      [in, target](Graph& g, std::size_t self) {
        if (!g.needs_grad(in)) return;
        const Tensor& p = g.value(in);
        const double scale =
            std::as_const(g).grad(self)[0] / static_cast<double>(p.size());
        std::span<double> gp = g.grad(in);
        for (std::size_t i = 0; i < p.size(); ++i) {
          // the clamp is flat outside its range
          if (p[i] < kProbClamp || p[i] > 1.0 - kProbClamp) continue;
          const double t = target[i];
          gp[i] += scale * (-t / p[i] + (1.0 - t) / (1.0 - p[i]));
        }
      });
}

Var mse_mean(const Var& pred, const Tensor& target) {
  const double value = mse_mean_value(pred.value(), target);
  const std::size_t in = pred.id();
  return pred.graph().record(
      OpKind::kMseMean, {in}, Tensor({1}, {value}),
      [in, target](Graph& g, std::size_t self) {
        if (!g.needs_grad(in)) return;
        const Tensor& p = g.value(in);
        const double scale =
            2.0 * std::as_const(g).grad(self)[0] / static_cast<double>(p.size());
        std::span<double> gp = g.grad(in);
        for (std::size_t i = 0; i < p.size(); ++i)
          gp[i] += scale * (p[i] - target[i]);
      });
}

}  // namespace eend
