#include "gemm.hpp"

namespace advtex::diff::detail {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* __restrict arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* __restrict brow = b + j * k;
      double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        acc0 += arow[p] * brow[p];
        acc1 += arow[p + 1] * brow[p + 1];
        acc2 += arow[p + 2] * brow[p + 2];
        acc3 += arow[p + 3] * brow[p + 3];
      }
      for (; p < k; ++p) acc0 += arow[p] * brow[p];
      c[i * n + j] += (acc0 + acc1) + (acc2 + acc3);
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* __restrict brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* __restrict crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace advtex::diff::detail
