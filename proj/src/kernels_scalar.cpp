#include "arlp/kernels.hpp"

#include <cmath>

// Reference implementations. Kept deliberately plain: these define the
// semantics the SIMD variants are tested against.

namespace arlp::kernels {
namespace {

double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void s_axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void s_scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void s_vadd(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_vsub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_vmul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_relu(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_relu_mask_acc(const double* g, const double* pre, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (pre[i] > 0.0) out[i] += g[i];
}

void s_sigmoid(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void s_vtanh(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void s_matvec(const double* a, const double* x, const double* b, double* y,
              std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b ? b[r] : 0.0;
    const double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void s_matvec_t_acc(const double* a, const double* g, double* out,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    const double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += gr * row[c];
  }
}

void s_ger_acc(double* a, const double* g, const double* x,
               std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void s_conv3x3(const double* in, const double* w, const double* b, double* out,
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
            const double* tap = wc + (dr * 3 + dc) * cin;
            const double* px = in + (static_cast<std::size_t>(rr) * side + cc) * cin;
            for (int ci = 0; ci < cin; ++ci) acc += tap[ci] * px[ci];
          }
        }
        o[co] = acc;
      }
    }
  }
}

void s_conv3x3_grad_input(const double* gout, const double* w, double* gin,
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
            const double* tap = wc + (dr * 3 + dc) * cin;
            double* px = gin + (static_cast<std::size_t>(rr) * side + cc) * cin;
            for (int ci = 0; ci < cin; ++ci) px[ci] += gv * tap[ci];
          }
        }
      }
    }
  }
}

void s_conv3x3_grad_params(const double* in, const double* gout, double* gw,
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
            double* tap = wc + (dr * 3 + dc) * cin;
            const double* px = in + (static_cast<std::size_t>(rr) * side + cc) * cin;
            for (int ci = 0; ci < cin; ++ci) tap[ci] += gv * px[ci];
          }
        }
      }
    }
  }
}

const Backend kScalar = {
    "scalar",
    s_dot, s_axpy, s_scale, s_vadd, s_vsub, s_vmul,
    s_relu, s_relu_mask_acc, s_sigmoid, s_vtanh,
    s_matvec, s_matvec_t_acc, s_ger_acc,
    s_conv3x3, s_conv3x3_grad_input, s_conv3x3_grad_params,
};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

}  // namespace arlp::kernels
