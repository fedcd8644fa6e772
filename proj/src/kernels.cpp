#include "hystdyn/kernels.hpp"

#include <algorithm>
#include <string>

#include "hystdyn/error.hpp"

namespace hystdyn::kernels {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw DimensionError(std::string(what) + ": dimension mismatch");
}

// Four interleaved partial sums combined in a fixed order: breaks the serial add
// chain so the loop pipelines, and stays bit-reproducible across builds of the
// same code because both kernel families share it.
inline double dot_row(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t c = 0;
  for (; c + 4 <= n; c += 4) {
    s0 += a[c] * b[c];
    s1 += a[c + 1] * b[c + 1];
    s2 += a[c + 2] * b[c + 2];
    s3 += a[c + 3] * b[c + 3];
  }
  for (; c < n; ++c) s0 += a[c] * b[c];
  return (s0 + s1) + (s2 + s3);
}

inline bool worth_parallel(std::size_t rows, std::size_t cols) {
  return rows * cols >= kParallelThreshold;
}

}  // namespace

namespace reference {

void gemv(const Matrix& m, std::span<const double> x, std::span<double> y) {
  check(m.cols() == x.size() && m.rows() == y.size(), "gemv");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r).data();
    const double acc = dot_row(row, x.data(), m.cols());
    y[r] = acc;
  }
}

void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
  check(m.cols() == x.size() && m.rows() == y.size(), "gemv_acc");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r).data();
    const double acc = dot_row(row, x.data(), m.cols());
    y[r] += acc;
  }
}

void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
  check(m.rows() == x.size() && m.cols() == y.size(), "gemv_t_acc");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r).data();
    const double xr = x[r];
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += row[c] * xr;
  }
}

void ger(std::span<const double> a, std::span<const double> b, Matrix& m) {
  check(m.rows() == a.size() && m.cols() == b.size(), "ger");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* row = m.row(r).data();
    const double ar = a[r];
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += ar * b[c];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check(x.size() == y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace reference

void gemv(const Matrix& m, std::span<const double> x, std::span<double> y) {
  check(m.cols() == x.size() && m.rows() == y.size(), "gemv");
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
  const std::size_t cols = m.cols();
#pragma omp parallel for schedule(static) if (worth_parallel(m.rows(), cols))
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* row = m.row(static_cast<std::size_t>(r)).data();
    const double acc = dot_row(row, x.data(), cols);
    y[static_cast<std::size_t>(r)] = acc;
  }
}

void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
  check(m.cols() == x.size() && m.rows() == y.size(), "gemv_acc");
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
  const std::size_t cols = m.cols();
#pragma omp parallel for schedule(static) if (worth_parallel(m.rows(), cols))
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* row = m.row(static_cast<std::size_t>(r)).data();
    const double acc = dot_row(row, x.data(), cols);
    y[static_cast<std::size_t>(r)] += acc;
  }
}

void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
  check(m.rows() == x.size() && m.cols() == y.size(), "gemv_t_acc");
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  if (!worth_parallel(rows, cols)) {
    reference::gemv_t_acc(m, x, y);
    return;
  }
  // Threads own disjoint column blocks of y; each y[c] still sums rows in order.
  constexpr std::ptrdiff_t kBlock = 64;
  const auto n_blocks = static_cast<std::ptrdiff_t>((cols + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < n_blocks; ++blk) {
    const std::size_t c0 = static_cast<std::size_t>(blk * kBlock);
    const std::size_t c1 = std::min(cols, c0 + static_cast<std::size_t>(kBlock));
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = m.row(r).data();
      const double xr = x[r];
      for (std::size_t c = c0; c < c1; ++c) y[c] += row[c] * xr;
    }
  }
}

void ger(std::span<const double> a, std::span<const double> b, Matrix& m) {
  check(m.rows() == a.size() && m.cols() == b.size(), "ger");
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
  const std::size_t cols = m.cols();
#pragma omp parallel for schedule(static) if (worth_parallel(m.rows(), cols))
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    double* row = m.row(static_cast<std::size_t>(r)).data();
    const double ar = a[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < cols; ++c) row[c] += ar * b[c];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  reference::axpy(alpha, x, y);
}

}  // namespace hystdyn::kernels
