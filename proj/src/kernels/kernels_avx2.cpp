// Compiled with -mavx2 -mfma. Only reached through the dispatch table after
// a CPU feature check.

#include <immintrin.h>

#include <cmath>

#include "intel_latent/kernels.hpp"
#include "kernels_internal.hpp"

namespace intel_latent::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void transpose_into(const double* src, std::size_t rows, std::size_t cols, double* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

// C (m x n) = A (m x k) * B (k x n), vectorised along n.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c, bool accumulate) {
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    std::size_t j = 0;
    for (; j < n4; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        acc = _mm256_fmadd_pd(_mm256_set1_pd(ai[p]), _mm256_loadu_pd(b + p * n + j), acc);
      }
      if (accumulate) acc = _mm256_add_pd(acc, _mm256_loadu_pd(ci + j));
      _mm256_storeu_pd(ci + j, acc);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * b[p * n + j];
      ci[j] = accumulate ? ci[j] + acc : acc;
    }
  }
}

void gemm_avx2(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c, bool accumulate) {
  if (trans_a) {
    double* pack = detail::scratch(0, m * k);
    transpose_into(a, k, m, pack);
    a = pack;
  }
  if (trans_b) {
    double* pack = detail::scratch(1, n * k);
    transpose_into(b, n, k, pack);
    b = pack;
  }
  gemm_nn(m, n, k, a, b, c, accumulate);
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, const double* x, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

// Points of b are transposed to structure-of-arrays so four distances are
// produced per iteration.
double pairwise_distance_sum_avx2(const double* a, std::size_t na, const double* b,
                                  std::size_t nb, std::size_t dim) {
  double* soa = detail::scratch(0, nb * dim);
  transpose_into(b, nb, dim, soa);
  const std::size_t nb4 = nb & ~std::size_t{3};
  double total = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    const double* ai = a + i * dim;
    __m256d row = _mm256_setzero_pd();
    for (std::size_t j = 0; j < nb4; j += 4) {
      __m256d sq = _mm256_setzero_pd();
      for (std::size_t d = 0; d < dim; ++d) {
        const __m256d diff =
            _mm256_sub_pd(_mm256_loadu_pd(soa + d * nb + j), _mm256_set1_pd(ai[d]));
        sq = _mm256_fmadd_pd(diff, diff, sq);
      }
      row = _mm256_add_pd(row, _mm256_sqrt_pd(sq));
    }
    double row_total = hsum(row);
    for (std::size_t j = nb4; j < nb; ++j) {
      double sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = soa[d * nb + j] - ai[d];
        sq += diff * diff;
      }
      row_total += std::sqrt(sq);
    }
    total += row_total;
  }
  return total;
}

}  // namespace

namespace detail {

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{
      Isa::avx2, "avx2",    gemm_avx2, add_avx2, sub_avx2, mul_avx2,
      axpy_avx2, scale_avx2, dot_avx2, sum_avx2, pairwise_distance_sum_avx2,
  };
  return table;
}

}  // namespace detail
}  // namespace intel_latent::kernels
