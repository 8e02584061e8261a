#pragma once

#include <cstddef>
#include <string_view>

// Low-level numeric kernels used by every model component. Each operation has
// a scalar reference implementation and, on x86-64 builds, an AVX2+FMA
// variant. The active backend is resolved once at startup (or explicitly via
// select()) and the rest of the code calls through the table, so the two
// variants stay interchangeable and equivalence-testable.
//
// Conventions:
//  - vectors are contiguous double arrays with explicit lengths
//  - matrices are row-major
//  - conv buffers are channel-last: map[(r * side + c) * channels + ch]
//  - "_acc" kernels accumulate into their output; everything else overwrites

namespace arlp::kernels {

struct Backend {
  const char* name;

  // reductions / elementwise
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
  void (*scale)(double alpha, double* x, std::size_t n);                  // x *= alpha
  void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
  void (*vsub)(const double* a, const double* b, double* out, std::size_t n);
  void (*vmul)(const double* a, const double* b, double* out, std::size_t n);

  // activations
  void (*relu)(const double* x, double* out, std::size_t n);
  // out[i] += g[i] where pre[i] > 0, i.e. the backward of relu
  void (*relu_mask_acc)(const double* g, const double* pre, double* out, std::size_t n);
  void (*sigmoid)(const double* x, double* out, std::size_t n);
  void (*vtanh)(const double* x, double* out, std::size_t n);

  // dense algebra
  // y = A x + b  (A is rows x cols row-major; b may be null for no bias)
  void (*matvec)(const double* a, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols);
  // out += A^T g  (backward through matvec w.r.t. x)
  void (*matvec_t_acc)(const double* a, const double* g, double* out,
                       std::size_t rows, std::size_t cols);
  // A += g x^T  (rank-one update; backward through matvec w.r.t. A)
  void (*ger_acc)(double* a, const double* g, const double* x,
                  std::size_t rows, std::size_t cols);

  // 3x3 same-padding convolution on a square channel-last map.
  // in:  side*side*cin, w: [cout][tap 0..8][cin], b: cout (nullable),
  // out: side*side*cout (overwritten)
  void (*conv3x3)(const double* in, const double* w, const double* b, double* out,
                  int side, int cin, int cout);
  // gin += backward of conv3x3 w.r.t. its input
  void (*conv3x3_grad_input)(const double* gout, const double* w, double* gin,
                             int side, int cin, int cout);
  // gw += , gb += backward w.r.t. the filter parameters (gb nullable)
  void (*conv3x3_grad_params)(const double* in, const double* gout, double* gw,
                              double* gb, int side, int cin, int cout);
};

/// Scalar reference backend; always available.
const Backend& scalar_backend();

/// AVX2+FMA backend. Only valid when avx2_available() is true.
const Backend& avx2_backend();

/// True when the binary contains the AVX2 variants and the CPU supports them.
bool avx2_available();

/// Backend used by the model code. Defaults to the best available variant;
/// the ARLP_KERNELS environment variable ("scalar", "avx2", "auto") overrides
/// the default at startup.
const Backend& active();

/// Explicitly select a backend by name ("scalar", "avx2", "auto").
/// Throws ConfigError for unknown names or unavailable backends.
void select(std::string_view name);

}  // namespace arlp::kernels
