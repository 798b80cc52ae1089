// scalar reference lane. plain loops, no fma contraction (see CMakeLists),
// sequential accumulation over the reduction dim for every output element.

#include "softfin/kernels.hpp"

#include <cmath>

namespace softfin::kern {
namespace {

double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double s_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void s_axpy(double* y, const double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void s_vexp(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

void s_vsigmoid(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void s_vtanh(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void s_gemm_nn(double* c, std::size_t ldc, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, std::size_t m, std::size_t n,
               std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void s_gemm_nt(double* c, std::size_t ldc, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, std::size_t m, std::size_t n,
               std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * lda;
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = accumulate ? ci[j] : 0.0;
      const double* bj = b + j * ldb;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void s_gemm_tn(double* c, std::size_t ldc, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, std::size_t m, std::size_t n,
               std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[p * lda + i];
      const double* bp = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void s_adam(double* p, const double* g, double* m, double* v, std::size_t n,
            double lr, double b1, double b2, double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    p[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

}  // namespace

const Ops scalar_ops = {
    s_dot, s_sum, s_axpy, s_vexp, s_vsigmoid, s_vtanh,
    s_gemm_nn, s_gemm_nt, s_gemm_tn, s_adam,
};

}  // namespace softfin::kern
