#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "seqner/rng.hpp"
#include "seqner/tensor.hpp"

namespace seqner::ad {

// A named trainable array with a persistent gradient accumulator.
template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<Real> v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

  void zero_grad() { grad.fill(Real(0)); }
};

template <typename Real>
class Graph;

// One value in the define-by-run computation graph. Nodes are created in
// topological order, so the reverse creation order is a valid backward order.
template <typename Real>
struct Node {
  Tensor<Real> owned;
  const Tensor<Real>* viewed = nullptr;  // non-owning constant view
  Tensor<Real> grad;                     // allocated on first contribution
  bool requires_grad = false;
  Parameter<Real>* param = nullptr;
  std::function<void(Node*)> backward;

  const Tensor<Real>& value() const { return viewed ? *viewed : owned; }
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }

  Tensor<Real>& ensure_grad() {
    if (grad.data.empty()) grad = Tensor<Real>(value().rows, value().cols);
    return grad;
  }
};

template <typename Real>
class Graph {
 public:
  Node<Real>* make(Tensor<Real> value, bool requires_grad) {
    nodes_.emplace_back();
    Node<Real>* n = &nodes_.back();
    n->owned = std::move(value);
    n->requires_grad = requires_grad;
    return n;
  }

  Node<Real>* constant(Tensor<Real> value) { return make(std::move(value), false); }

  // Views an external tensor without copying; the tensor must outlive the graph.
  Node<Real>* constant_ref(const Tensor<Real>* value) {
    nodes_.emplace_back();
    Node<Real>* n = &nodes_.back();
    n->viewed = value;
    return n;
  }

  Node<Real>* param(Parameter<Real>& p) {
    nodes_.emplace_back();
    Node<Real>* n = &nodes_.back();
    n->viewed = &p.value;
    n->requires_grad = true;
    n->param = &p;
    n->backward = [](Node<Real>* self) { self->param->grad.add_inplace(self->grad); };
    return n;
  }

  // Adds dloss/dparam into every reachable parameter's grad accumulator.
  // Repeated calls without zeroing accumulate there; node-local gradients are
  // reset on each call.
  void backward(Node<Real>* loss) {
    if (loss->rows() != 1 || loss->cols() != 1)
      throw ArgumentError("backward: loss must be scalar, got " + loss->value().shape_str());
    for (Node<Real>& n : nodes_) {
      n.grad.data.clear();
      n.grad.rows = n.grad.cols = 0;
    }
    loss->ensure_grad().data[0] = Real(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<Real>& n = *it;
      if (n.requires_grad && n.backward && !n.grad.data.empty()) n.backward(&n);
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node<Real>> nodes_;
};

// ---------------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------------

namespace detail {

template <typename Real>
void require_same_shape(const char* op, Node<Real>* a, Node<Real>* b) {
  if (!a->value().same_shape(b->value()))
    throw ShapeError(std::string(op) + ": shape mismatch " + a->value().shape_str() + " vs " +
                     b->value().shape_str());
}

}  // namespace detail

template <typename Real>
Node<Real>* matmul(Graph<Real>& g, Node<Real>* a, Node<Real>* b) {
  Node<Real>* n = g.make(matmul_values(a->value(), b->value()),
                         a->requires_grad || b->requires_grad);
  if (n->requires_grad)
    n->backward = [a, b](Node<Real>* self) {
      if (a->requires_grad) {
        Tensor<Real> bt = transposed(b->value());
        Tensor<Real>& da = a->ensure_grad();
        gemm_nn(self->grad.data.data(), bt.data.data(), da.data.data(), self->grad.rows,
                self->grad.cols, bt.cols);
      }
      if (b->requires_grad) {
        Tensor<Real> at = transposed(a->value());
        Tensor<Real>& db = b->ensure_grad();
        gemm_nn(at.data.data(), self->grad.data.data(), db.data.data(), at.rows, at.cols,
                self->grad.cols);
      }
    };
  return n;
}

template <typename Real>
Node<Real>* add(Graph<Real>& g, Node<Real>* a, Node<Real>* b) {
  detail::require_same_shape("add", a, b);
  Tensor<Real> out = a->value();
  out.add_inplace(b->value());
  Node<Real>* n = g.make(std::move(out), a->requires_grad || b->requires_grad);
  if (n->requires_grad)
    n->backward = [a, b](Node<Real>* self) {
      if (a->requires_grad) a->ensure_grad().add_inplace(self->grad);
      if (b->requires_grad) b->ensure_grad().add_inplace(self->grad);
    };
  return n;
}

template <typename Real>
Node<Real>* sub(Graph<Real>& g, Node<Real>* a, Node<Real>* b) {
  detail::require_same_shape("sub", a, b);
  Tensor<Real> out = a->value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value().data[i];
  Node<Real>* n = g.make(std::move(out), a->requires_grad || b->requires_grad);
  if (n->requires_grad)
    n->backward = [a, b](Node<Real>* self) {
      if (a->requires_grad) a->ensure_grad().add_inplace(self->grad);
      if (b->requires_grad) {
        Tensor<Real>& db = b->ensure_grad();
        for (size_t i = 0; i < db.data.size(); ++i) db.data[i] -= self->grad.data[i];
      }
    };
  return n;
}

template <typename Real>
Node<Real>* mul(Graph<Real>& g, Node<Real>* a, Node<Real>* b) {
  detail::require_same_shape("mul", a, b);
  Tensor<Real> out = a->value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value().data[i];
  Node<Real>* n = g.make(std::move(out), a->requires_grad || b->requires_grad);
  if (n->requires_grad)
    n->backward = [a, b](Node<Real>* self) {
      if (a->requires_grad) {
        Tensor<Real>& da = a->ensure_grad();
        for (size_t i = 0; i < da.data.size(); ++i)
          da.data[i] += self->grad.data[i] * b->value().data[i];
      }
      if (b->requires_grad) {
        Tensor<Real>& db = b->ensure_grad();
        for (size_t i = 0; i < db.data.size(); ++i)
          db.data[i] += self->grad.data[i] * a->value().data[i];
      }
    };
  return n;
}

template <typename Real>
Node<Real>* scale(Graph<Real>& g, Node<Real>* a, Real factor) {
  Tensor<Real> out = a->value();
  for (Real& v : out.data) v *= factor;
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, factor](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (size_t i = 0; i < da.data.size(); ++i) da.data[i] += factor * self->grad.data[i];
    };
  return n;
}

template <typename Real>
Node<Real>* sigmoid(Graph<Real>& g, Node<Real>* a) {
  Tensor<Real> out = a->value();
  for (Real& v : out.data) v = Real(1) / (Real(1) + std::exp(-v));
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (size_t i = 0; i < da.data.size(); ++i) {
        Real y = self->value().data[i];
        da.data[i] += self->grad.data[i] * y * (Real(1) - y);
      }
    };
  return n;
}

template <typename Real>
Node<Real>* tanh_op(Graph<Real>& g, Node<Real>* a) {
  Tensor<Real> out = a->value();
  for (Real& v : out.data) v = std::tanh(v);
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (size_t i = 0; i < da.data.size(); ++i) {
        Real y = self->value().data[i];
        da.data[i] += self->grad.data[i] * (Real(1) - y * y);
      }
    };
  return n;
}

template <typename Real>
Node<Real>* log_op(Graph<Real>& g, Node<Real>* a) {
  Tensor<Real> out = a->value();
  for (Real& v : out.data) v = std::log(v);
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (size_t i = 0; i < da.data.size(); ++i)
        da.data[i] += self->grad.data[i] / a->value().data[i];
    };
  return n;
}

// Max-shifted softmax along rows (axis=1) or columns (axis=0).
template <typename Real>
Node<Real>* softmax(Graph<Real>& g, Node<Real>* a, int axis = 1) {
  if (axis != 0 && axis != 1) throw ArgumentError("softmax: axis must be 0 or 1");
  const Tensor<Real>& x = a->value();
  Tensor<Real> out(x.rows, x.cols);
  auto run_row = [](const Real* in, Real* o, int n, int stride) {
    Real mx = in[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, in[i * stride]);
    Real sum = Real(0);
    for (int i = 0; i < n; ++i) {
      Real e = std::exp(in[i * stride] - mx);
      o[i * stride] = e;
      sum += e;
    }
    for (int i = 0; i < n; ++i) o[i * stride] /= sum;
  };
  if (axis == 1)
    for (int r = 0; r < x.rows; ++r) run_row(x.row(r), out.row(r), x.cols, 1);
  else
    for (int c = 0; c < x.cols; ++c) run_row(x.data.data() + c, out.data.data() + c, x.rows, x.cols);
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, axis](Node<Real>* self) {
      const Tensor<Real>& y = self->value();
      Tensor<Real>& da = a->ensure_grad();
      auto run_back = [](const Real* yv, const Real* dy, Real* dx, int n2, int stride) {
        Real dot = Real(0);
        for (int i = 0; i < n2; ++i) dot += yv[i * stride] * dy[i * stride];
        for (int i = 0; i < n2; ++i)
          dx[i * stride] += yv[i * stride] * (dy[i * stride] - dot);
      };
      if (axis == 1)
        for (int r = 0; r < y.rows; ++r)
          run_back(y.row(r), self->grad.row(r), da.row(r), y.cols, 1);
      else
        for (int c = 0; c < y.cols; ++c)
          run_back(y.data.data() + c, self->grad.data.data() + c, da.data.data() + c, y.rows,
                   y.cols);
    };
  return n;
}

template <typename Real>
Node<Real>* concat_cols(Graph<Real>& g, const std::vector<Node<Real>*>& parts) {
  if (parts.empty()) throw ArgumentError("concat_cols: no inputs");
  int rows = parts[0]->rows(), cols = 0;
  bool rg = false;
  for (Node<Real>* p : parts) {
    if (p->rows() != rows)
      throw ShapeError("concat_cols: row mismatch " + p->value().shape_str());
    cols += p->cols();
    rg = rg || p->requires_grad;
  }
  Tensor<Real> out(rows, cols);
  int off = 0;
  for (Node<Real>* p : parts) {
    for (int r = 0; r < rows; ++r)
      std::copy(p->value().row(r), p->value().row(r) + p->cols(), out.row(r) + off);
    off += p->cols();
  }
  Node<Real>* n = g.make(std::move(out), rg);
  if (rg) {
    std::vector<Node<Real>*> ps = parts;
    n->backward = [ps, rows](Node<Real>* self) {
      int off2 = 0;
      for (Node<Real>* p : ps) {
        if (p->requires_grad) {
          Tensor<Real>& dp = p->ensure_grad();
          for (int r = 0; r < rows; ++r) {
            const Real* src = self->grad.row(r) + off2;
            Real* dst = dp.row(r);
            for (int c = 0; c < p->cols(); ++c) dst[c] += src[c];
          }
        }
        off2 += p->cols();
      }
    };
  }
  return n;
}

template <typename Real>
Node<Real>* concat_rows(Graph<Real>& g, const std::vector<Node<Real>*>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  int cols = parts[0]->cols(), rows = 0;
  bool rg = false;
  for (Node<Real>* p : parts) {
    if (p->cols() != cols)
      throw ShapeError("concat_rows: column mismatch " + p->value().shape_str());
    rows += p->rows();
    rg = rg || p->requires_grad;
  }
  Tensor<Real> out(rows, cols);
  size_t off = 0;
  for (Node<Real>* p : parts) {
    std::copy(p->value().data.begin(), p->value().data.end(), out.data.begin() + off);
    off += p->value().numel();
  }
  Node<Real>* n = g.make(std::move(out), rg);
  if (rg) {
    std::vector<Node<Real>*> ps = parts;
    n->backward = [ps](Node<Real>* self) {
      size_t off2 = 0;
      for (Node<Real>* p : ps) {
        if (p->requires_grad) {
          Tensor<Real>& dp = p->ensure_grad();
          for (size_t i = 0; i < dp.data.size(); ++i) dp.data[i] += self->grad.data[off2 + i];
        }
        off2 += p->value().numel();
      }
    };
  }
  return n;
}

template <typename Real>
Node<Real>* slice_cols(Graph<Real>& g, Node<Real>* a, int lo, int hi) {
  if (lo < 0 || hi > a->cols() || lo >= hi)
    throw ShapeError("slice_cols: bad range on " + a->value().shape_str());
  Tensor<Real> out(a->rows(), hi - lo);
  for (int r = 0; r < a->rows(); ++r)
    std::copy(a->value().row(r) + lo, a->value().row(r) + hi, out.row(r));
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, lo](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (int r = 0; r < self->grad.rows; ++r) {
        const Real* src = self->grad.row(r);
        Real* dst = da.row(r) + lo;
        for (int c = 0; c < self->grad.cols; ++c) dst[c] += src[c];
      }
    };
  return n;
}

template <typename Real>
Node<Real>* slice_rows(Graph<Real>& g, Node<Real>* a, int lo, int count) {
  if (lo < 0 || lo + count > a->rows() || count <= 0)
    throw ShapeError("slice_rows: bad range on " + a->value().shape_str());
  Tensor<Real> out(count, a->cols());
  std::copy(a->value().row(lo), a->value().row(lo) + static_cast<size_t>(count) * a->cols(),
            out.data.begin());
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, lo](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      Real* dst = da.row(lo);
      for (size_t i = 0; i < self->grad.data.size(); ++i) dst[i] += self->grad.data[i];
    };
  return n;
}

// out row (j*R + i) = x row i; the explicit expansion used instead of
// broadcasting (bias rows, attention queries in time-major layout).
template <typename Real>
Node<Real>* tile_rows(Graph<Real>& g, Node<Real>* a, int k) {
  if (k < 1) throw ArgumentError("tile_rows: k must be >= 1");
  Node<Real>* n = g.make(tiled_rows(a->value(), k), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, k](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      size_t block = da.data.size();
      for (int j = 0; j < k; ++j) {
        const Real* src = self->grad.data.data() + static_cast<size_t>(j) * block;
        for (size_t i = 0; i < block; ++i) da.data[i] += src[i];
      }
    };
  return n;
}

// out row (i*k + j) = x row i (consecutive repetition)
template <typename Real>
Node<Real>* repeat_rows(Graph<Real>& g, Node<Real>* a, int k) {
  if (k < 1) throw ArgumentError("repeat_rows: k must be >= 1");
  Node<Real>* n = g.make(repeated_rows(a->value(), k), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, k](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (int i = 0; i < da.rows; ++i)
        for (int j = 0; j < k; ++j) {
          const Real* src = self->grad.row(i * k + j);
          Real* dst = da.row(i);
          for (int c = 0; c < da.cols; ++c) dst[c] += src[c];
        }
    };
  return n;
}

// out (R x n): every column equals the single input column
template <typename Real>
Node<Real>* repeat_cols(Graph<Real>& g, Node<Real>* a, int n_cols) {
  if (a->cols() != 1) throw ShapeError("repeat_cols: input must be Rx1, got " + a->value().shape_str());
  Tensor<Real> out(a->rows(), n_cols);
  for (int r = 0; r < a->rows(); ++r) {
    Real v = a->value().at(r, 0);
    Real* row = out.row(r);
    for (int c = 0; c < n_cols; ++c) row[c] = v;
  }
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (int r = 0; r < self->grad.rows; ++r) {
        const Real* row = self->grad.row(r);
        Real acc = Real(0);
        for (int c = 0; c < self->grad.cols; ++c) acc += row[c];
        da.at(r, 0) += acc;
      }
    };
  return n;
}

// Row lookup (embeddings): out[i] = table[ids[i]].
template <typename Real>
Node<Real>* gather(Graph<Real>& g, Node<Real>* table, const std::vector<int>& ids) {
  for (int id : ids)
    if (id < 0 || id >= table->rows())
      throw ArgumentError("gather: id " + std::to_string(id) + " out of range for " +
                          table->value().shape_str());
  Tensor<Real> out(static_cast<int>(ids.size()), table->cols());
  for (size_t i = 0; i < ids.size(); ++i)
    std::copy(table->value().row(ids[i]), table->value().row(ids[i]) + table->cols(),
              out.row(static_cast<int>(i)));
  Node<Real>* n = g.make(std::move(out), table->requires_grad);
  if (n->requires_grad) {
    std::vector<int> ids_copy = ids;
    n->backward = [table, ids_copy](Node<Real>* self) {
      Tensor<Real>& dt = table->ensure_grad();
      for (size_t i = 0; i < ids_copy.size(); ++i) {
        const Real* src = self->grad.row(static_cast<int>(i));
        Real* dst = dt.row(ids_copy[i]);
        for (int c = 0; c < dt.cols; ++c) dst[c] += src[c];
      }
    };
  }
  return n;
}

// Per-row scatter accumulation: out[r, ids[r*C + c]] += src[r, c]. The copy
// distribution over the extended vocabulary is built with this.
template <typename Real>
Node<Real>* scatter_add(Graph<Real>& g, Node<Real>* src, const std::vector<int>& ids, int width) {
  const Tensor<Real>& x = src->value();
  if (static_cast<size_t>(x.rows) * x.cols != ids.size())
    throw ShapeError("scatter_add: ids size " + std::to_string(ids.size()) +
                     " does not match " + x.shape_str());
  for (int id : ids)
    if (id < 0 || id >= width)
      throw ArgumentError("scatter_add: id " + std::to_string(id) + " out of range");
  Tensor<Real> out(x.rows, width);
  for (int r = 0; r < x.rows; ++r) {
    const Real* srow = x.row(r);
    Real* orow = out.row(r);
    const int* idrow = ids.data() + static_cast<size_t>(r) * x.cols;
    for (int c = 0; c < x.cols; ++c) orow[idrow[c]] += srow[c];
  }
  Node<Real>* n = g.make(std::move(out), src->requires_grad);
  if (n->requires_grad) {
    std::vector<int> ids_copy = ids;
    n->backward = [src, ids_copy](Node<Real>* self) {
      Tensor<Real>& ds = src->ensure_grad();
      for (int r = 0; r < ds.rows; ++r) {
        Real* drow = ds.row(r);
        const Real* grow = self->grad.row(r);
        const int* idrow = ids_copy.data() + static_cast<size_t>(r) * ds.cols;
        for (int c = 0; c < ds.cols; ++c) drow[c] += grow[idrow[c]];
      }
    };
  }
  return n;
}

template <typename Real>
Node<Real>* sum_all(Graph<Real>& g, Node<Real>* a) {
  Real acc = Real(0);
  for (Real v : a->value().data) acc += v;
  Node<Real>* n = g.make(Tensor<Real>::scalar(acc), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      Real go = self->grad.data[0];
      for (Real& v : da.data) v += go;
    };
  return n;
}

template <typename Real>
Node<Real>* pick(Graph<Real>& g, Node<Real>* a, int r, int c) {
  if (r < 0 || r >= a->rows() || c < 0 || c >= a->cols())
    throw ArgumentError("pick: index out of range on " + a->value().shape_str());
  Node<Real>* n = g.make(Tensor<Real>::scalar(a->value().at(r, c)), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, r, c](Node<Real>* self) { a->ensure_grad().at(r, c) += self->grad.data[0]; };
  return n;
}

// Fused LSTM activation: gates laid out [i|f|g|o] per row; returns [h|c].
template <typename Real>
Node<Real>* lstm_cell(Graph<Real>& g, Node<Real>* gates, Node<Real>* c_prev) {
  const Tensor<Real>& gt = gates->value();
  const int H = c_prev->cols();
  if (gt.cols != 4 * H || gt.rows != c_prev->rows())
    throw ShapeError("lstm_cell: gates " + gt.shape_str() + " incompatible with state " +
                     c_prev->value().shape_str());
  const int B = gt.rows;
  Tensor<Real> out(B, 2 * H);  // [h | c]
  Tensor<Real> acts(B, 4 * H); // saved activations [i|f|g|o]
  for (int b = 0; b < B; ++b) {
    const Real* gr = gt.row(b);
    const Real* cp = c_prev->value().row(b);
    Real* ar = acts.row(b);
    Real* hr = out.row(b);
    Real* cr = out.row(b) + H;
    for (int j = 0; j < H; ++j) {
      Real iv = Real(1) / (Real(1) + std::exp(-gr[j]));
      Real fv = Real(1) / (Real(1) + std::exp(-gr[H + j]));
      Real gv = std::tanh(gr[2 * H + j]);
      Real ov = Real(1) / (Real(1) + std::exp(-gr[3 * H + j]));
      Real cv = fv * cp[j] + iv * gv;
      ar[j] = iv;
      ar[H + j] = fv;
      ar[2 * H + j] = gv;
      ar[3 * H + j] = ov;
      cr[j] = cv;
      hr[j] = ov * std::tanh(cv);
    }
  }
  Node<Real>* n = g.make(std::move(out), gates->requires_grad || c_prev->requires_grad);
  if (n->requires_grad) {
    auto saved = std::make_shared<Tensor<Real>>(std::move(acts));
    n->backward = [gates, c_prev, saved, H, B](Node<Real>* self) {
      Tensor<Real>* dg = gates->requires_grad ? &gates->ensure_grad() : nullptr;
      Tensor<Real>* dc_prev = c_prev->requires_grad ? &c_prev->ensure_grad() : nullptr;
      for (int b = 0; b < B; ++b) {
        const Real* ar = saved->row(b);
        const Real* cr = self->value().row(b) + H;
        const Real* cp = c_prev->value().row(b);
        const Real* dh = self->grad.row(b);
        const Real* dc_out = self->grad.row(b) + H;
        for (int j = 0; j < H; ++j) {
          Real iv = ar[j], fv = ar[H + j], gv = ar[2 * H + j], ov = ar[3 * H + j];
          Real tc = std::tanh(cr[j]);
          Real dcv = dc_out[j] + dh[j] * ov * (Real(1) - tc * tc);
          if (dg) {
            Real* dgr = dg->row(b);
            dgr[j] += dcv * gv * iv * (Real(1) - iv);                 // d input gate
            dgr[H + j] += dcv * cp[j] * fv * (Real(1) - fv);          // d forget gate
            dgr[2 * H + j] += dcv * iv * (Real(1) - gv * gv);         // d cell candidate
            dgr[3 * H + j] += dh[j] * tc * ov * (Real(1) - ov);       // d output gate
          }
          if (dc_prev) dc_prev->row(b)[j] += dcv * fv;
        }
      }
    };
  }
  return n;
}

// Attention context in time-major layout: ctx[b] = sum_t a[b,t] * h[t*B + b].
template <typename Real>
Node<Real>* attention_context(Graph<Real>& g, Node<Real>* attn, Node<Real>* hflat) {
  const int B = attn->rows();
  const int T = attn->cols();
  const int K = hflat->cols();
  if (hflat->rows() != T * B)
    throw ShapeError("attention_context: h " + hflat->value().shape_str() + " vs attn " +
                     attn->value().shape_str());
  Tensor<Real> out(B, K);
  for (int b = 0; b < B; ++b) {
    Real* orow = out.row(b);
    const Real* arow = attn->value().row(b);
    for (int t = 0; t < T; ++t) {
      Real w = arow[t];
      if (w == Real(0)) continue;
      const Real* hrow = hflat->value().row(t * B + b);
      for (int k = 0; k < K; ++k) orow[k] += w * hrow[k];
    }
  }
  Node<Real>* n = g.make(std::move(out), attn->requires_grad || hflat->requires_grad);
  if (n->requires_grad)
    n->backward = [attn, hflat, B, T, K](Node<Real>* self) {
      Tensor<Real>* da = attn->requires_grad ? &attn->ensure_grad() : nullptr;
      Tensor<Real>* dh = hflat->requires_grad ? &hflat->ensure_grad() : nullptr;
      for (int b = 0; b < B; ++b) {
        const Real* go = self->grad.row(b);
        const Real* arow = attn->value().row(b);
        for (int t = 0; t < T; ++t) {
          const Real* hrow = hflat->value().row(t * B + b);
          if (da) {
            Real acc = Real(0);
            for (int k = 0; k < K; ++k) acc += go[k] * hrow[k];
            da->row(b)[t] += acc;
          }
          if (dh) {
            Real w = arow[t];
            Real* dhrow = dh->row(t * B + b);
            for (int k = 0; k < K; ++k) dhrow[k] += w * go[k];
          }
        }
      }
    };
  return n;
}

// (T*B)x1 column, time-major -> BxT matrix
template <typename Real>
Node<Real>* fold_time(Graph<Real>& g, Node<Real>* a, int batch) {
  if (a->cols() != 1 || a->rows() % batch != 0)
    throw ShapeError("fold_time: need (T*B)x1, got " + a->value().shape_str());
  const int T = a->rows() / batch;
  Tensor<Real> out(batch, T);
  for (int t = 0; t < T; ++t)
    for (int b = 0; b < batch; ++b) out.at(b, t) = a->value().data[static_cast<size_t>(t) * batch + b];
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, batch](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      const int T2 = self->grad.cols;
      for (int t = 0; t < T2; ++t)
        for (int b = 0; b < batch; ++b)
          da.data[static_cast<size_t>(t) * batch + b] += self->grad.at(b, t);
    };
  return n;
}

// Weighted negative log likelihood of picked entries:
//   loss = sum_r weight[r] * -log(max(dist[r, ids[r]], floor))
template <typename Real>
Node<Real>* nll_pick(Graph<Real>& g, Node<Real>* dist, const std::vector<int>& ids,
                     const std::vector<Real>& weights, Real floor) {
  const Tensor<Real>& x = dist->value();
  if (static_cast<int>(ids.size()) != x.rows || weights.size() != ids.size())
    throw ShapeError("nll_pick: ids/weights must have one entry per row of " + x.shape_str());
  Real acc = Real(0);
  for (int r = 0; r < x.rows; ++r) {
    if (weights[r] == Real(0)) continue;
    if (ids[r] < 0 || ids[r] >= x.cols) throw ArgumentError("nll_pick: id out of range");
    Real p = x.at(r, ids[r]);
    acc -= weights[r] * std::log(p < floor ? floor : p);
  }
  Node<Real>* n = g.make(Tensor<Real>::scalar(acc), dist->requires_grad);
  if (n->requires_grad) {
    std::vector<int> ids_copy = ids;
    std::vector<Real> w_copy = weights;
    n->backward = [dist, ids_copy, w_copy, floor](Node<Real>* self) {
      Tensor<Real>& dd = dist->ensure_grad();
      Real go = self->grad.data[0];
      for (int r = 0; r < dd.rows; ++r) {
        if (w_copy[r] == Real(0)) continue;
        Real p = dist->value().at(r, ids_copy[r]);
        if (p < floor) continue;  // clamped region has zero slope
        dd.at(r, ids_copy[r]) -= go * w_copy[r] / p;
      }
    };
  }
  return n;
}

// Inverted dropout; the mask is drawn once at construction.
template <typename Real>
Node<Real>* dropout(Graph<Real>& g, Node<Real>* a, double prob, Rng& rng) {
  if (prob <= 0.0) return a;
  if (prob >= 1.0) throw ArgumentError("dropout: prob must be < 1");
  auto mask = std::make_shared<std::vector<Real>>(a->value().numel());
  Real keep = Real(1.0 - prob);
  for (Real& m : *mask) m = rng.coin(prob) ? Real(0) : Real(1) / keep;
  Tensor<Real> out = a->value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= (*mask)[i];
  Node<Real>* n = g.make(std::move(out), a->requires_grad);
  if (n->requires_grad)
    n->backward = [a, mask](Node<Real>* self) {
      Tensor<Real>& da = a->ensure_grad();
      for (size_t i = 0; i < da.data.size(); ++i) da.data[i] += self->grad.data[i] * (*mask)[i];
    };
  return n;
}

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  int checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;

  bool pass(double tolerance) const { return max_rel_err < tolerance; }
};

// Central-difference comparison against analytic gradients, coordinate-wise.
template <typename Real>
GradCheckReport grad_check(const std::function<Node<Real>*(Graph<Real>&)>& build,
                           const std::vector<Parameter<Real>*>& params, Real epsilon) {
  if (!(epsilon > Real(0))) throw ArgumentError("grad_check: epsilon must be > 0");
  GradCheckReport report;
  for (Parameter<Real>* p : params) p->zero_grad();
  {
    Graph<Real> g;
    Node<Real>* loss = build(g);
    g.backward(loss);
  }
  auto eval_loss = [&]() {
    Graph<Real> g;
    return build(g)->value().data[0];
  };
  for (Parameter<Real>* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    for (size_t i = 0; i < p->value.data.size(); ++i) {
      Real saved = p->value.data[i];
      p->value.data[i] = saved + epsilon;
      double up = static_cast<double>(eval_loss());
      p->value.data[i] = saved - epsilon;
      double down = static_cast<double>(eval_loss());
      p->value.data[i] = saved;
      double numeric = (up - down) / (2.0 * static_cast<double>(epsilon));
      double analytic = static_cast<double>(p->grad.data[i]);
      double rel = std::abs(analytic - numeric) /
                   std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      ++entry.checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace seqner::ad
