#include "arlp/layers.hpp"

#include <cmath>
#include <numeric>

#include "arlp/errors.hpp"
#include "arlp/kernels.hpp"

namespace arlp {

Tensor::Tensor(std::string n, std::vector<int> s, bool bias)
    : name(std::move(n)), shape(std::move(s)), is_bias(bias) {
  std::size_t total = 1;
  for (int d : shape) total *= static_cast<std::size_t>(d);
  value.assign(total, 0.0);
  grad.assign(total, 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors_) n += t->size();
  return n;
}

void ParamSet::zero_grad() {
  for (Tensor* t : tensors_) t->zero_grad();
}

void init_params(ParamSet& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Tensor* t : params.tensors()) {
    if (t->is_bias) {
      std::fill(t->value.begin(), t->value.end(), 0.0);
      continue;
    }
    // fan-in = everything but the leading (output) dimension
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < t->shape.size(); ++i)
      fan_in *= static_cast<std::size_t>(t->shape[i]);
    if (fan_in == 0) fan_in = 1;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t->value) v = dist(rng);
  }
}

DenseLayer::DenseLayer(const std::string& name, int in, int out)
    : w(name + ".w", {out, in}), b(name + ".b", {out}, true), in_dim(in), out_dim(out) {}

void DenseLayer::forward(const double* x, double* y) const {
  kernels::active().matvec(w.value.data(), x, b.value.data(), y,
                           static_cast<std::size_t>(out_dim),
                           static_cast<std::size_t>(in_dim));
}

void DenseLayer::backward(const double* x, const double* gy, double* gx) {
  const auto& k = kernels::active();
  k.ger_acc(w.grad.data(), gy, x, static_cast<std::size_t>(out_dim),
            static_cast<std::size_t>(in_dim));
  k.vadd(b.grad.data(), gy, b.grad.data(), static_cast<std::size_t>(out_dim));
  if (gx)
    k.matvec_t_acc(w.value.data(), gy, gx, static_cast<std::size_t>(out_dim),
                   static_cast<std::size_t>(in_dim));
}

void DenseLayer::register_params(ParamSet& set) {
  set.add(&w);
  set.add(&b);
}

ConvLayer::ConvLayer(const std::string& name, int side_, int cin_, int cout_)
    : w(name + ".w", {cout_, 9, cin_}),
      b(name + ".b", {cout_}, true),
      side(side_),
      cin(cin_),
      cout(cout_) {}

void ConvLayer::forward(const double* in, double* out) const {
  kernels::active().conv3x3(in, w.value.data(), b.value.data(), out, side, cin, cout);
}

void ConvLayer::backward(const double* in, const double* gout, double* gin) {
  const auto& k = kernels::active();
  k.conv3x3_grad_params(in, gout, w.grad.data(), b.grad.data(), side, cin, cout);
  if (gin) k.conv3x3_grad_input(gout, w.value.data(), gin, side, cin, cout);
}

void ConvLayer::register_params(ParamSet& set) {
  set.add(&w);
  set.add(&b);
}

}  // namespace arlp
