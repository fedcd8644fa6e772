#pragma once

// Dense kernels used by the LSTM forward/backward passes.
//
// The default implementations split rows across OpenMP threads once the
// problem is large enough to pay for the fork. Each output element is reduced
// in the same order as in the serial versions under kernels::reference, so the
// two agree bit for bit; the reference versions exist for tests and benchmarks.

#include <cstddef>
#include <span>

#include "hystdyn/numerics.hpp"

namespace hystdyn::kernels {

/// Work size (rows * cols) below which kernels stay serial.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

/// y = M x
void gemv(const Matrix& m, std::span<const double> x, std::span<double> y);
/// y += M x
void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
/// y += M^T x
void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
/// M += a b^T
void ger(std::span<const double> a, std::span<const double> b, Matrix& m);
/// y += x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace reference {
void gemv(const Matrix& m, std::span<const double> x, std::span<double> y);
void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
void ger(std::span<const double> a, std::span<const double> b, Matrix& m);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace reference

}  // namespace hystdyn::kernels
