// avx2+fma lane. compiled with -mavx2 -mfma (see CMakeLists); only dispatched
// to when the cpu reports avx2+fma. exp goes through glibc's libmvec vector
// math (4-wide f64); sigmoid/tanh are built on top of it. accumulation order
// over the reduction dim is fixed per output element, independent of tiling.

#include "softfin/kernels.hpp"

#include <immintrin.h>

#include <cmath>

#if defined(__GLIBC__)
extern "C" __m256d _ZGVdN4v_exp(__m256d);  // libmvec, pulled in via libm
static inline __m256d vexp4(__m256d v) { return _ZGVdN4v_exp(v); }
#else
static inline __m256d vexp4(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  for (int i = 0; i < 4; ++i) t[i] = std::exp(t[i]);
  return _mm256_load_pd(t);
}
#endif

namespace softfin::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double a_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = acc0, acc2 = acc0, acc3 = acc0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double r = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) r = std::fma(a[i], b[i], r);
  return r;
}

double a_sum(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = acc0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double r = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) r += x[i];
  return r;
}

void a_axpy(double* y, const double* x, double alpha, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void a_vexp(double* y, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, vexp4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double tin[4] = {0.0, 0.0, 0.0, 0.0}, tout[4];
    for (std::size_t r = i; r < n; ++r) tin[r - i] = x[r];
    _mm256_store_pd(tout, vexp4(_mm256_load_pd(tin)));
    for (std::size_t r = i; r < n; ++r) y[r] = tout[r - i];
  }
}

inline __m256d sigmoid4(__m256d v) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d e = vexp4(_mm256_xor_pd(v, sign));  // exp(-x)
  return _mm256_div_pd(one, _mm256_add_pd(one, e));
}

// tanh(x) = sign(x) * (1 - e) / (1 + e),  e = exp(-2|x|); e in (0,1] so the
// quotient never sees inf/inf and large |x| saturate cleanly to +/-1
inline __m256d tanh4(__m256d v) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d ax = _mm256_andnot_pd(sign, v);
  __m256d e = vexp4(_mm256_mul_pd(_mm256_set1_pd(-2.0), ax));
  __m256d t = _mm256_div_pd(_mm256_sub_pd(one, e), _mm256_add_pd(one, e));
  return _mm256_or_pd(t, _mm256_and_pd(sign, v));
}

void a_vsigmoid(double* y, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, sigmoid4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double tin[4] = {0.0, 0.0, 0.0, 0.0}, tout[4];
    for (std::size_t r = i; r < n; ++r) tin[r - i] = x[r];
    _mm256_store_pd(tout, sigmoid4(_mm256_load_pd(tin)));
    for (std::size_t r = i; r < n; ++r) y[r] = tout[r - i];
  }
}

void a_vtanh(double* y, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, tanh4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double tin[4] = {0.0, 0.0, 0.0, 0.0}, tout[4];
    for (std::size_t r = i; r < n; ++r) tin[r - i] = x[r];
    _mm256_store_pd(tout, tanh4(_mm256_load_pd(tin)));
    for (std::size_t r = i; r < n; ++r) y[r] = tout[r - i];
  }
}

// broadcast-fma gemm, 2 rows x 8 cols register tile, k innermost per tile.
void a_gemm_nn(double* c, std::size_t ldc, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, std::size_t m, std::size_t n,
               std::size_t k, bool acc) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + i * lda;
    const double* a1 = a0 + lda;
    double* c0 = c + i * ldc;
    double* c1 = c0 + ldc;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c00, c01, c10, c11;
      if (acc) {
        c00 = _mm256_loadu_pd(c0 + j);
        c01 = _mm256_loadu_pd(c0 + j + 4);
        c10 = _mm256_loadu_pd(c1 + j);
        c11 = _mm256_loadu_pd(c1 + j + 4);
      } else {
        c00 = c01 = c10 = c11 = _mm256_setzero_pd();
      }
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av0 = _mm256_set1_pd(a0[p]);
        const __m256d av1 = _mm256_set1_pd(a1[p]);
        const __m256d b0 = _mm256_loadu_pd(b + p * ldb + j);
        const __m256d b1 = _mm256_loadu_pd(b + p * ldb + j + 4);
        c00 = _mm256_fmadd_pd(av0, b0, c00);
        c01 = _mm256_fmadd_pd(av0, b1, c01);
        c10 = _mm256_fmadd_pd(av1, b0, c10);
        c11 = _mm256_fmadd_pd(av1, b1, c11);
      }
      _mm256_storeu_pd(c0 + j, c00);
      _mm256_storeu_pd(c0 + j + 4, c01);
      _mm256_storeu_pd(c1 + j, c10);
      _mm256_storeu_pd(c1 + j + 4, c11);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c00 = acc ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      __m256d c10 = acc ? _mm256_loadu_pd(c1 + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d bv = _mm256_loadu_pd(b + p * ldb + j);
        c00 = _mm256_fmadd_pd(_mm256_set1_pd(a0[p]), bv, c00);
        c10 = _mm256_fmadd_pd(_mm256_set1_pd(a1[p]), bv, c10);
      }
      _mm256_storeu_pd(c0 + j, c00);
      _mm256_storeu_pd(c1 + j, c10);
    }
    for (; j < n; ++j) {
      double s0 = acc ? c0[j] : 0.0;
      double s1 = acc ? c1[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        s0 = std::fma(a0[p], b[p * ldb + j], s0);
        s1 = std::fma(a1[p], b[p * ldb + j], s1);
      }
      c0[j] = s0;
      c1[j] = s1;
    }
  }
  if (i < m) {
    const double* a0 = a + i * lda;
    double* c0 = c + i * ldc;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d c00 = acc ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p)
        c00 = _mm256_fmadd_pd(_mm256_set1_pd(a0[p]), _mm256_loadu_pd(b + p * ldb + j), c00);
      _mm256_storeu_pd(c0 + j, c00);
    }
    for (; j < n; ++j) {
      double s0 = acc ? c0[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s0 = std::fma(a0[p], b[p * ldb + j], s0);
      c0[j] = s0;
    }
  }
}

void a_gemm_nt(double* c, std::size_t ldc, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, std::size_t m, std::size_t n,
               std::size_t k, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * lda;
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = a_dot(ai, b + j * ldb, k);
      ci[j] = acc ? ci[j] + d : d;
    }
  }
}

void a_gemm_tn(double* c, std::size_t ldc, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, std::size_t m, std::size_t n,
               std::size_t k, bool acc) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    double* c0 = c + i * ldc;
    double* c1 = c0 + ldc;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d c00 = acc ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      __m256d c10 = acc ? _mm256_loadu_pd(c1 + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d bv = _mm256_loadu_pd(b + p * ldb + j);
        c00 = _mm256_fmadd_pd(_mm256_set1_pd(a[p * lda + i]), bv, c00);
        c10 = _mm256_fmadd_pd(_mm256_set1_pd(a[p * lda + i + 1]), bv, c10);
      }
      _mm256_storeu_pd(c0 + j, c00);
      _mm256_storeu_pd(c1 + j, c10);
    }
    for (; j < n; ++j) {
      double s0 = acc ? c0[j] : 0.0;
      double s1 = acc ? c1[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        s0 = std::fma(a[p * lda + i], b[p * ldb + j], s0);
        s1 = std::fma(a[p * lda + i + 1], b[p * ldb + j], s1);
      }
      c0[j] = s0;
      c1[j] = s1;
    }
  }
  if (i < m) {
    double* c0 = c + i * ldc;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d c00 = acc ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p)
        c00 = _mm256_fmadd_pd(_mm256_set1_pd(a[p * lda + i]), _mm256_loadu_pd(b + p * ldb + j), c00);
      _mm256_storeu_pd(c0 + j, c00);
    }
    for (; j < n; ++j) {
      double s0 = acc ? c0[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s0 = std::fma(a[p * lda + i], b[p * ldb + j], s0);
      c0[j] = s0;
    }
  }
}

void a_adam(double* p, const double* g, double* m, double* v, std::size_t n,
            double lr, double b1, double b2, double eps, double bc1, double bc2) {
  const __m256d b1v = _mm256_set1_pd(b1), nb1v = _mm256_set1_pd(1.0 - b1);
  const __m256d b2v = _mm256_set1_pd(b2), nb2v = _mm256_set1_pd(1.0 - b2);
  const __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
  const __m256d bc1v = _mm256_set1_pd(bc1), bc2v = _mm256_set1_pd(bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_fmadd_pd(b1v, _mm256_loadu_pd(m + i), _mm256_mul_pd(nb1v, gv));
    __m256d vv = _mm256_fmadd_pd(b2v, _mm256_loadu_pd(v + i), _mm256_mul_pd(nb2v, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mh = _mm256_div_pd(mv, bc1v);
    const __m256d vh = _mm256_div_pd(vv, bc2v);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, mh), _mm256_add_pd(_mm256_sqrt_pd(vh), epsv));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = std::fma(b1, m[i], (1.0 - b1) * g[i]);
    v[i] = std::fma(b2, v[i], (1.0 - b2) * (g[i] * g[i]));
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace

const Ops avx2_ops = {
    a_dot, a_sum, a_axpy, a_vexp, a_vsigmoid, a_vtanh,
    a_gemm_nn, a_gemm_nt, a_gemm_tn, a_adam,
};

}  // namespace softfin::kern
