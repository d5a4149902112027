#include "sli/kernels.hpp"

namespace sli::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_scalar(w + r * cols, x, cols);
    y[r] = bias ? s + bias[r] : s;
  }
}

void gemv_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                       const double* g, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] == 0.0) continue;
    axpy_scalar(g[r], w + r * cols, out, cols);
  }
}

void ger_acc_scalar(double alpha, const double* g, std::size_t rows,
                    const double* x, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double a = alpha * g[r];
    if (a == 0.0) continue;
    axpy_scalar(a, x, out + r * cols, cols);
  }
}

void blend_scalar(double tau, double* target, const double* online,
                  std::size_t n) {
  const double mix = 1.0 - tau;
  for (std::size_t i = 0; i < n; ++i)
    target[i] = tau * target[i] + mix * online[i];
}

void cgemv_scalar(const cdouble* a, std::size_t n, const cdouble* x,
                  cdouble* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double xr = x[j].real();
    const double xi = x[j].imag();
    const cdouble* col = a + j * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double ar = col[i].real();
      const double ai = col[i].imag();
      y[i] = cdouble(y[i].real() + (ar * xr - ai * xi),
                     y[i].imag() + (ar * xi + ai * xr));
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar",      dot_scalar,   axpy_scalar,
                                 gemv_scalar,   gemv_t_acc_scalar,
                                 ger_acc_scalar, blend_scalar, cgemv_scalar};
  return table;
}

}  // namespace sli::kernels
