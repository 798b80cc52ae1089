#pragma once

// numeric kernels, f64. two lanes: a scalar reference lane and an avx2+fma
// lane (x86-64). the active lane is picked once at startup from cpu caps,
// overridable with SOFTFIN_KERNELS=scalar|avx2. every lane keeps a fixed
// per-output-element accumulation order over the reduction dimension, so
// results within a lane do not depend on batch size or tiling.

#include <cstddef>

namespace softfin::kern {

enum class Backend { scalar, avx2 };

struct Ops {
  // reductions / elementwise
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  void (*axpy)(double* y, const double* x, double alpha, std::size_t n);  // y += alpha*x
  void (*vexp)(double* y, const double* x, std::size_t n);
  void (*vsigmoid)(double* y, const double* x, std::size_t n);
  void (*vtanh)(double* y, const double* x, std::size_t n);

  // C[m x n] (+)= A[m x k] * B[k x n], row-major with leading strides
  void (*gemm_nn)(double* c, std::size_t ldc, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, std::size_t m, std::size_t n,
                  std::size_t k, bool accumulate);
  // C[m x n] (+)= A[m x k] * B[n x k]^T
  void (*gemm_nt)(double* c, std::size_t ldc, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, std::size_t m, std::size_t n,
                  std::size_t k, bool accumulate);
  // C[m x n] (+)= A[k x m]^T * B[k x n]
  void (*gemm_tn)(double* c, std::size_t ldc, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, std::size_t m, std::size_t n,
                  std::size_t k, bool accumulate);

  // fused adam step with bias correction:
  //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
  //   p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)      bc1 = 1-b1^t, bc2 = 1-b2^t
  void (*adam)(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double b1, double b2, double eps, double bc1, double bc2);
};

bool avx2_supported();
Backend backend();
void set_backend(Backend b);  // test hook; process is single-threaded
const char* backend_name();
const Ops& ops();

extern const Ops scalar_ops;
#if SOFTFIN_HAVE_AVX2_LANE
extern const Ops avx2_ops;
#endif

}  // namespace softfin::kern
