#include "sgnet/tensor.hpp"

#include <cmath>
#include <sstream>

#include "sgnet/errors.hpp"

namespace sgnet {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0) {
    throw ConfigError("tensor extents must be positive, got " + shape.str());
  }
  impl_->shape = shape;
  impl_->data.assign(shape.numel(), 0.0);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : Tensor(shape, requires_grad) {
  if (values.size() != shape.numel()) {
    throw ConfigError("tensor " + shape.str() + " needs " +
                      std::to_string(shape.numel()) + " values, got " +
                      std::to_string(values.size()));
  }
  impl_->data = std::move(values);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return Tensor(shape, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t(shape, requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::scalar(double value) { return full({1, 1, 1, 1}, value); }

double Tensor::item() const {
  if (numel() != 1) {
    throw UsageError("item() on tensor of shape " + shape().str());
  }
  return impl_->data[0];
}

double Tensor::at(int n, int c, int h, int w) const {
  return impl_->data[offset(impl_->shape, n, c, h, w)];
}

std::span<double> Tensor::grad_buffer() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

Tensor Tensor::detach() const {
  return Tensor(impl_->shape, impl_->data, false);
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace sgnet
