#pragma once

#include <cstddef>
#include <span>

// Dense GEMM kernels used by matmul and its backward pass.
//
// Every kernel accumulates each output element over the reduction index in
// ascending order starting from 0.0, so the serial reference and the OpenMP
// kernels produce bitwise-identical results for any thread count.
namespace bicameral::kernels {

// c[m x p] = a[m x k] * b[k x p]
// c[m x p] = a[m x k] * b[p x k]^T
// c[m x p] = a[k x m]^T * b[k x p]

namespace serial {
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
}  // namespace serial

namespace parallel {
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
}  // namespace parallel

// Below this many multiply-adds the dispatchers stay on the calling thread.
inline constexpr std::size_t kParallelWorkThreshold = 1u << 16;

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p);

int max_threads();

}  // namespace bicameral::kernels
