#include "bicameral/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bicameral::kernels {

namespace serial {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) acc += a[i * k + r] * b[r * p + j];
      c[i * p + j] = acc;
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) acc += a[i * k + r] * b[j * k + r];
      c[i * p + j] = acc;
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) acc += a[r * m + i] * b[r * p + j];
      c[i * p + j] = acc;
    }
  }
}

}  // namespace serial

namespace parallel {

// Row-streaming loop order (i, r, j): the inner loop is contiguous in b and c
// and each c[i][j] still sees its terms in ascending r.
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* crow = pc + i * p;
    std::fill(crow, crow + p, 0.0);
    const double* arow = pa + i * k;
    for (std::size_t r = 0; r < k; ++r) {
      const double air = arow[r];
      const double* brow = pb + r * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += air * brow[j];
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < p; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) acc += arow[r] * brow[r];
      pc[i * p + j] = acc;
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* crow = pc + i * p;
    std::fill(crow, crow + p, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      const double ari = pa[r * m + i];
      const double* brow = pb + r * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += ari * brow[j];
    }
  }
}

}  // namespace parallel

namespace {

bool worth_parallel(std::size_t m, std::size_t k, std::size_t p) {
  return m > 1 && m * k * p >= kParallelWorkThreshold && max_threads() > 1;
}

// Same loop nests as the parallel kernels, without the OpenMP team.
void gemm_nn_rows(const double* pa, const double* pb, double* pc, std::size_t m, std::size_t k,
                  std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * p;
    std::fill(crow, crow + p, 0.0);
    const double* arow = pa + i * k;
    for (std::size_t r = 0; r < k; ++r) {
      const double air = arow[r];
      const double* brow = pb + r * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += air * brow[j];
    }
  }
}

void gemm_tn_rows(const double* pa, const double* pb, double* pc, std::size_t m, std::size_t k,
                  std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * p;
    std::fill(crow, crow + p, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      const double ari = pa[r * m + i];
      const double* brow = pb + r * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += ari * brow[j];
    }
  }
}

}  // namespace

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  if (worth_parallel(m, k, p)) {
    parallel::gemm_nn(a, b, c, m, k, p);
  } else {
    gemm_nn_rows(a.data(), b.data(), c.data(), m, k, p);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  if (worth_parallel(m, k, p)) {
    parallel::gemm_nt(a, b, c, m, k, p);
  } else {
    serial::gemm_nt(a, b, c, m, k, p);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t p) {
  if (worth_parallel(m, k, p)) {
    parallel::gemm_tn(a, b, c, m, k, p);
  } else {
    gemm_tn_rows(a.data(), b.data(), c.data(), m, k, p);
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bicameral::kernels
