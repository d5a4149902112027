#pragma once

// Dense inner-loop kernels used by the network and the momentum-space
// propagation. Every kernel has a portable scalar reference; an AVX2/FMA
// variant is selected at runtime when the CPU supports it.

#include <complex>
#include <cstddef>
#include <string_view>

namespace sli::kernels {

using cdouble = std::complex<double>;

struct KernelTable {
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + bias, W row-major rows x cols; bias may be null.
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols,
               const double* x, const double* bias, double* y);
  // out += W^T g, W row-major rows x cols.
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                     const double* g, double* out);
  // G += alpha * g x^T, G row-major rows x cols.
  void (*ger_acc)(double alpha, const double* g, std::size_t rows,
                  const double* x, std::size_t cols, double* out);
  // target = tau * target + (1 - tau) * online
  void (*blend)(double tau, double* target, const double* online,
                std::size_t n);
  // y = A x for a column-major complex n x n matrix.
  void (*cgemv)(const cdouble* a, std::size_t n, const cdouble* x,
                cdouble* y);
};

const KernelTable& scalar_table();

// Null when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

// Active table. Chosen once: AVX2 when available unless the environment
// variable SLI_KERNELS is set to "scalar".
const KernelTable& active();

}  // namespace sli::kernels
