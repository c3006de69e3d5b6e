#pragma once

// Data-parallel inner loops. Each routine has a scalar reference and, on
// x86-64, an AVX2/FMA variant selected once at startup.
//
// Selection: the AVX2 table is used when the CPU reports avx2+fma, unless
// INTEL_LATENT_SIMD=scalar is set in the environment. The choice is fixed
// for the lifetime of the process, so results are bit-reproducible run to
// run on the same machine. Scalar and AVX2 results agree to rounding only
// (FMA and lane-wise partial sums change the summation order).

#include <cstddef>
#include <string_view>

namespace intel_latent::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  /// C = op(A) * op(B) (+ C when accumulate). Row-major, contiguous.
  /// op(A) is m x k: A is m x k, or k x m when trans_a. op(B) is k x n:
  /// B is k x n, or n x k when trans_b.
  void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c, bool accumulate);

  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// out = alpha * x
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);

  /// Sum over all (i, j) of ||a_i - b_j||_2 for row-major point sets.
  double (*pairwise_distance_sum)(const double* a, std::size_t na, const double* b,
                                  std::size_t nb, std::size_t dim);
};

const KernelTable& scalar_table();

/// nullptr when the build lacks AVX2 kernels or the CPU cannot run them.
const KernelTable* avx2_table();

/// Table chosen at first use; see the header comment.
const KernelTable& active();

}  // namespace intel_latent::kernels
