#include "arlp/kernels.hpp"

#include <immintrin.h>

#include <cmath>

// AVX2 + FMA variants. Four doubles per lane, scalar tail loops for the
// remainder. FMA contraction makes reductions differ from the scalar backend
// by normal rounding noise; the equivalence tests budget for that.

namespace arlp::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

double a_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i] * b[i];
  return out;
}

void a_axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void a_scale(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void a_vadd(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void a_vsub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void a_vmul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void a_relu(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void a_relu_mask_acc(const double* g, const double* pre, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), gated));
  }
  for (; i < n; ++i)
    if (pre[i] > 0.0) out[i] += g[i];
}

// exp/tanh stay scalar: libm accuracy matters more than the handful of LSTM
// gate evaluations per step, and both backends then agree bit for bit.
void a_sigmoid(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void a_vtanh(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void a_matvec(const double* a, const double* x, const double* b, double* y,
              std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = (b ? b[r] : 0.0) + a_dot(a + r * cols, x, cols);
}

void a_matvec_t_acc(const double* a, const double* g, double* out,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) a_axpy(g[r], a + r * cols, out, cols);
}

void a_ger_acc(double* a, const double* g, const double* x,
               std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) a_axpy(g[r], x, a + r * cols, cols);
}

void a_conv3x3(const double* in, const double* w, const double* b, double* out,
               int side, int cin, int cout) {
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      double* o = out + (static_cast<std::size_t>(r) * side + c) * cout;
      for (int co = 0; co < cout; ++co) {
        double acc = b ? b[co] : 0.0;
        const double* wc = w + static_cast<std::size_t>(co) * 9 * cin;
        for (int dr = 0; dr < 3; ++dr) {
          const int rr = r + dr - 1;
          if (rr < 0 || rr >= side) continue;
          for (int dc = 0; dc < 3; ++dc) {
            const int cc = c + dc - 1;
            if (cc < 0 || cc >= side) continue;
            acc += a_dot(wc + (dr * 3 + dc) * cin,
                         in + (static_cast<std::size_t>(rr) * side + cc) * cin, cin);
          }
        }
        o[co] = acc;
      }
    }
  }
}

void a_conv3x3_grad_input(const double* gout, const double* w, double* gin,
                          int side, int cin, int cout) {
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double* g = gout + (static_cast<std::size_t>(r) * side + c) * cout;
      for (int co = 0; co < cout; ++co) {
        const double gv = g[co];
        const double* wc = w + static_cast<std::size_t>(co) * 9 * cin;
        for (int dr = 0; dr < 3; ++dr) {
          const int rr = r + dr - 1;
          if (rr < 0 || rr >= side) continue;
          for (int dc = 0; dc < 3; ++dc) {
            const int cc = c + dc - 1;
            if (cc < 0 || cc >= side) continue;
            a_axpy(gv, wc + (dr * 3 + dc) * cin,
                   gin + (static_cast<std::size_t>(rr) * side + cc) * cin, cin);
          }
        }
      }
    }
  }
}

void a_conv3x3_grad_params(const double* in, const double* gout, double* gw,
                           double* gb, int side, int cin, int cout) {
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double* g = gout + (static_cast<std::size_t>(r) * side + c) * cout;
      for (int co = 0; co < cout; ++co) {
        const double gv = g[co];
        if (gb) gb[co] += gv;
        double* wc = gw + static_cast<std::size_t>(co) * 9 * cin;
        for (int dr = 0; dr < 3; ++dr) {
          const int rr = r + dr - 1;
          if (rr < 0 || rr >= side) continue;
          for (int dc = 0; dc < 3; ++dc) {
            const int cc = c + dc - 1;
            if (cc < 0 || cc >= side) continue;
            a_axpy(gv, in + (static_cast<std::size_t>(rr) * side + cc) * cin,
                   wc + (dr * 3 + dc) * cin, cin);
          }
        }
      }
    }
  }
}

const Backend kAvx2 = {
    "avx2",
    a_dot, a_axpy, a_scale, a_vadd, a_vsub, a_vmul,
    a_relu, a_relu_mask_acc, a_sigmoid, a_vtanh,
    a_matvec, a_matvec_t_acc, a_ger_acc,
    a_conv3x3, a_conv3x3_grad_input, a_conv3x3_grad_params,
};

}  // namespace

const Backend& avx2_backend() { return kAvx2; }

}  // namespace arlp::kernels
