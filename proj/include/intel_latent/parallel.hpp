#pragma once

#include <cstddef>
#include <functional>

namespace intel_latent {

/// Worker threads to use: hardware concurrency, capped by the
/// INTEL_LATENT_THREADS environment variable when set (minimum 1).
std::size_t worker_count();

/// Run fn(block) for block in [0, blocks). Blocks are handed out
/// round-robin to at most worker_count() threads; callers write per-block
/// results and reduce them in block order, so the result does not depend on
/// the thread count.
void parallel_blocks(std::size_t blocks, const std::function<void(std::size_t)>& fn);

}  // namespace intel_latent
