#include <atomic>
#include <cstdlib>
#include <string>

#include "gmvp/kernels.hpp"

namespace gmvp::kernels {

#if defined(GMVP_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

const KernelTable* avx2_table() {
#if defined(GMVP_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernels() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* resolve(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") return avx2_table();
  if (name == "auto" || name.empty()) {
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
  }
  return nullptr;
}

const KernelTable* initial() {
  const char* env = std::getenv("GMVP_KERNELS");
  if (env != nullptr) {
    if (const KernelTable* t = resolve(env)) return t;
  }
  return resolve("auto");
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const KernelTable* t = resolve(name);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table()) out.push_back(t);
  return out;
}

}  // namespace gmvp::kernels
