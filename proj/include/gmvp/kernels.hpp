#pragma once

// Dense double-precision inner loops used by the tensor engine.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2/FMA variant is compiled separately and chosen at runtime when the CPU
// supports it. The GMVP_KERNELS environment variable ("scalar", "avx2",
// "auto") overrides the choice; tests compare the variants against each other.

#include <cstddef>
#include <string_view>
#include <vector>

namespace gmvp::kernels {

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // c[m x n] += a[m x k] * b[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // c[m x n] += a[m x k] * b[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // c[m x n] += a[k x m]^T * b[k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
};

const KernelTable& scalar_table();

// Null when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

// The table currently used by tensor ops.
const KernelTable& active();

// Selects "scalar", "avx2" or "auto". Returns false when the request cannot be honoured
// (the active table is left unchanged).
bool select(std::string_view name);

// Names of every variant usable on this machine, scalar first.
std::vector<const KernelTable*> available();

}  // namespace gmvp::kernels
