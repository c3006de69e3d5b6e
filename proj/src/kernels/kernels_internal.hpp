#pragma once

#include "intel_latent/kernels.hpp"

#include <cstddef>

namespace intel_latent::kernels::detail {

/// Per-thread scratch buffer `slot` (0 or 1) holding at least n doubles.
/// Defined outside the AVX2 translation unit so no standard-library
/// template is instantiated with AVX2 code generation.
double* scratch(int slot, std::size_t n);

#if defined(INTEL_LATENT_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

}  // namespace intel_latent::kernels::detail
