#include "intel_latent/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace intel_latent {

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("INTEL_LATENT_THREADS"); env && *env) {
    try {
      const long cap = std::stol(env);
      n = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1L, cap)));
    } catch (const std::exception&) {
      // Unparseable value: ignore it.
    }
  }
  return n;
}

void parallel_blocks(std::size_t blocks, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t b = w; b < blocks; b += workers) fn(b);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace intel_latent
