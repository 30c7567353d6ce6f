#pragma once

#include <cstddef>

// Dense loops shared by matmul and conv2d. All matrices row-major.
namespace hypirb::ad::kernels {

/// C[m,n] += A[m,k] * B[k,n]
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* __restrict a,
                    const double* __restrict b, double* __restrict c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict ci = c + i * n;
    const double* ai = a + i * k;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const double a0 = ai[p], a1 = ai[p + 1], a2 = ai[p + 2], a3 = ai[p + 3];
      const double* b0 = b + p * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
    }
    for (; p < k; ++p) {
      const double ap = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ap * bp[j];
    }
  }
}

/// C[m,n] += A[k,m]^T * B[k,n]
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* __restrict a,
                    const double* __restrict b, double* __restrict c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* __restrict ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

/// out[n,m] = in[m,n]^T
inline void transpose(std::size_t m, std::size_t n, const double* __restrict in, double* __restrict out) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < m; i0 += kBlock) {
    for (std::size_t j0 = 0; j0 < n; j0 += kBlock) {
      const std::size_t i1 = i0 + kBlock < m ? i0 + kBlock : m;
      const std::size_t j1 = j0 + kBlock < n ? j0 + kBlock : n;
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) out[j * m + i] = in[i * n + j];
    }
  }
}

}  // namespace hypirb::ad::kernels
