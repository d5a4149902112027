#include "sli/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace sli::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

inline __m256i tail_mask(std::size_t rem) {
  alignas(32) static const long long table[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 4 - rem));
}

// Four rows per pass; one transpose-reduce yields the four sums.
void gemv_avx2(const double* w, std::size_t rows, std::size_t cols,
               const double* x, const double* bias, double* y) {
  const std::size_t full = cols & ~std::size_t{3};
  const std::size_t rem = cols - full;
  const __m256i mask = tail_mask(rem);
  const __m256d xt = rem ? _mm256_maskload_pd(x + full, mask) : _mm256_setzero_pd();
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    for (std::size_t c = 0; c < full; c += 4) {
      const __m256d xv = _mm256_loadu_pd(x + c);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + c), xv, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + c), xv, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + c), xv, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + c), xv, a3);
    }
    if (rem) {
      a0 = _mm256_fmadd_pd(_mm256_maskload_pd(w0 + full, mask), xt, a0);
      a1 = _mm256_fmadd_pd(_mm256_maskload_pd(w1 + full, mask), xt, a1);
      a2 = _mm256_fmadd_pd(_mm256_maskload_pd(w2 + full, mask), xt, a2);
      a3 = _mm256_fmadd_pd(_mm256_maskload_pd(w3 + full, mask), xt, a3);
    }
    const __m256d h01 = _mm256_hadd_pd(a0, a1);
    const __m256d h23 = _mm256_hadd_pd(a2, a3);
    const __m256d lo = _mm256_permute2f128_pd(h01, h23, 0x20);
    const __m256d hi = _mm256_permute2f128_pd(h01, h23, 0x31);
    __m256d s = _mm256_add_pd(lo, hi);
    if (bias) s = _mm256_add_pd(s, _mm256_loadu_pd(bias + r));
    _mm256_storeu_pd(y + r, s);
  }
  for (; r < rows; ++r) {
    const double s = dot_avx2(w + r * cols, x, cols);
    y[r] = bias ? s + bias[r] : s;
  }
}

void gemv_t_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                     const double* g, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] == 0.0) continue;
    axpy_avx2(g[r], w + r * cols, out, cols);
  }
}

void ger_acc_avx2(double alpha, const double* g, std::size_t rows,
                  const double* x, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double a = alpha * g[r];
    if (a == 0.0) continue;
    axpy_avx2(a, x, out + r * cols, cols);
  }
}

void blend_avx2(double tau, double* target, const double* online,
                std::size_t n) {
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d vm = _mm256_set1_pd(1.0 - tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mixed = _mm256_mul_pd(vm, _mm256_loadu_pd(online + i));
    _mm256_storeu_pd(target + i,
                     _mm256_fmadd_pd(vt, _mm256_loadu_pd(target + i), mixed));
  }
  const double mix = 1.0 - tau;
  for (; i < n; ++i) target[i] = tau * target[i] + mix * online[i];
}

// Two complex numbers per register: [re0, im0, re1, im1].
void cgemv_avx2(const cdouble* a, std::size_t n, const cdouble* x,
                cdouble* y) {
  auto* yd = reinterpret_cast<double*>(y);
  for (std::size_t i = 0; i < 2 * n; ++i) yd[i] = 0.0;
  const std::size_t pairs = n / 2;
  for (std::size_t j = 0; j < n; ++j) {
    const __m256d xr = _mm256_set1_pd(x[j].real());
    const __m256d xi = _mm256_set1_pd(x[j].imag());
    const auto* col = reinterpret_cast<const double*>(a + j * n);
    for (std::size_t p = 0; p < pairs; ++p) {
      const __m256d av = _mm256_loadu_pd(col + 4 * p);
      const __m256d swapped = _mm256_permute_pd(av, 0x5);
      const __m256d prod =
          _mm256_fmaddsub_pd(av, xr, _mm256_mul_pd(swapped, xi));
      _mm256_storeu_pd(yd + 4 * p,
                       _mm256_add_pd(_mm256_loadu_pd(yd + 4 * p), prod));
    }
    if (n % 2) {
      const std::size_t i = n - 1;
      const double ar = col[2 * i];
      const double ai = col[2 * i + 1];
      yd[2 * i] += ar * x[j].real() - ai * x[j].imag();
      yd[2 * i + 1] += ar * x[j].imag() + ai * x[j].real();
    }
  }
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable table{"avx2",       dot_avx2,   axpy_avx2,
                                 gemv_avx2,    gemv_t_acc_avx2,
                                 ger_acc_avx2, blend_avx2, cgemv_avx2};
  return &table;
}

}  // namespace sli::kernels

#else

namespace sli::kernels {
const KernelTable* avx2_table_impl() { return nullptr; }
}  // namespace sli::kernels

#endif
