#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Parameter bookkeeping and the two dense building blocks (fully connected
// and 3x3 convolution). Gradients live next to their values; every backward
// pass accumulates so batches sum naturally.

namespace arlp {

/// Named parameter block with a gradient buffer of the same shape.
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool is_bias = false;

  Tensor() = default;
  Tensor(std::string n, std::vector<int> s, bool bias = false);

  std::size_t size() const { return value.size(); }
  void zero_grad();
};

/// Ordered registry of the tensors a model owns. The order is fixed at
/// construction and defines the checkpoint layout and the init stream.
class ParamSet {
 public:
  void add(Tensor* t) { tensors_.push_back(t); }
  const std::vector<Tensor*>& tensors() const { return tensors_; }
  std::size_t total_size() const;
  void zero_grad();

 private:
  std::vector<Tensor*> tensors_;
};

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for weights, zero for biases,
/// drawn from a single seeded stream in registry order.
void init_params(ParamSet& params, std::uint64_t seed);

/// Affine map y = W x + b. Backward accumulates dW, db and optionally the
/// input gradient.
struct DenseLayer {
  Tensor w;  // [out][in]
  Tensor b;  // [out]
  int in_dim = 0;
  int out_dim = 0;

  DenseLayer() = default;
  DenseLayer(const std::string& name, int in, int out);

  void forward(const double* x, double* y) const;
  /// gy is d(loss)/dy; gx (nullable) receives += d(loss)/dx.
  void backward(const double* x, const double* gy, double* gx);

  void register_params(ParamSet& set);
};

/// 3x3 same-padding convolution over an S x S channel-last map.
struct ConvLayer {
  Tensor w;  // [cout][9][cin]
  Tensor b;  // [cout]
  int side = 0;
  int cin = 0;
  int cout = 0;

  ConvLayer() = default;
  ConvLayer(const std::string& name, int side, int cin, int cout);

  void forward(const double* in, double* out) const;
  /// gout is d(loss)/d(out); gin (nullable) receives += d(loss)/d(in).
  void backward(const double* in, const double* gout, double* gin);

  void register_params(ParamSet& set);
};

}  // namespace arlp
