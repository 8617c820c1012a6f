#pragma once

#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "seqner/error.hpp"

namespace seqner::ad {

// Worker count for the matrix kernels. Work is always split by output block,
// so results are bitwise identical for any setting.
inline std::atomic<int>& gemm_threads_slot() {
  static std::atomic<int> n{1};
  return n;
}
inline int gemm_threads() { return gemm_threads_slot().load(); }
inline void set_gemm_threads(int n) { gemm_threads_slot().store(n < 1 ? 1 : n); }

// Dense row-major 2-D array. Scalars are 1x1, vectors 1xN or Nx1.
template <typename Real>
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<Real> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, Real(0)) {}
  Tensor(int r, int c, Real fill) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor scalar(Real v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }

  size_t numel() const { return data.size(); }
  Real& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  Real at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  Real* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const Real* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
  }

  void fill(Real v) { std::fill(data.begin(), data.end(), v); }

  void add_inplace(const Tensor& o) {
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(rows, cols);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
    return out;
  }
};

template <typename Real>
Tensor<Real> transposed(const Tensor<Real>& x) {
  Tensor<Real> out(x.cols, x.rows);
  for (int r = 0; r < x.rows; ++r)
    for (int c = 0; c < x.cols; ++c) out.at(c, r) = x.at(r, c);
  return out;
}

// out row (j*R + i) = x row i, blocks stacked k times
template <typename Real>
Tensor<Real> tiled_rows(const Tensor<Real>& x, int k) {
  Tensor<Real> out(x.rows * k, x.cols);
  for (int j = 0; j < k; ++j)
    std::copy(x.data.begin(), x.data.end(),
              out.data.begin() + static_cast<size_t>(j) * x.numel());
  return out;
}

// out row (i*k + j) = x row i, each row repeated k times consecutively
template <typename Real>
Tensor<Real> repeated_rows(const Tensor<Real>& x, int k) {
  Tensor<Real> out(x.rows * k, x.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < k; ++j)
      std::copy(x.row(i), x.row(i) + x.cols, out.row(i * k + j));
  return out;
}

namespace detail {

template <typename Real>
void gemm_block(const Real* a, const Real* b, Real* c, int m, int k, int n, int i_lo, int i_hi,
                int j_lo, int j_hi) {
  for (int i = i_lo; i < i_hi; ++i) {
    const Real* arow = a + static_cast<size_t>(i) * k;
    Real* crow = c + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      Real av = arow[l];
      if (av == Real(0)) continue;
      const Real* brow = b + static_cast<size_t>(l) * n;
      for (int j = j_lo; j < j_hi; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

// c (m x n) += a (m x k) * b (k x n)
template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, int m, int k, int n) {
  int threads = gemm_threads();
  long long flops = static_cast<long long>(m) * k * n;
  if (threads <= 1 || flops < (1 << 18)) {
    detail::gemm_block(a, b, c, m, k, n, 0, m, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  if (m >= threads * 2) {
    int chunk = (m + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      int lo = w * chunk, hi = std::min(m, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([=]() { detail::gemm_block(a, b, c, m, k, n, lo, hi, 0, n); });
    }
  } else {
    int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      int lo = w * chunk, hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([=]() { detail::gemm_block(a, b, c, m, k, n, 0, m, lo, hi); });
    }
  }
  for (auto& t : pool) t.join();
}

template <typename Real>
Tensor<Real> matmul_values(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: inner dimensions differ " + a.shape_str() + " vs " + b.shape_str());
  Tensor<Real> out(a.rows, b.cols);
  gemm_nn(a.data.data(), b.data.data(), out.data.data(), a.rows, a.cols, b.cols);
  return out;
}

}  // namespace seqner::ad
