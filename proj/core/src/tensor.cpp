#include "mfcm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "mfcm/error.hpp"

namespace mfcm {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, bool requires_grad) : storage_(std::make_shared<Storage>()) {
  storage_->values.assign(shape_numel(shape), 0.0);
  storage_->shape = std::move(shape);
  storage_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  if (values.size() != shape_numel(shape)) {
    throw ShapeMismatch("tensor of shape " + shape_to_string(shape) + " given " +
                        std::to_string(values.size()) + " values");
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
  storage_->requires_grad = requires_grad;
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  std::fill(t.storage_->values.begin(), t.storage_->values.end(), value);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return storage_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= storage_->shape.size()) {
    throw ShapeMismatch("axis " + std::to_string(axis) + " out of range for " +
                        shape_to_string(storage_->shape));
  }
  return storage_->shape[axis];
}

std::size_t Tensor::numel() const { return storage_->values.size(); }

std::span<double> Tensor::data() { return storage_->values; }
std::span<const double> Tensor::data() const { return storage_->values; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeMismatch("item() on tensor " + shape_to_string(shape()));
  return storage_->values[0];
}

bool Tensor::requires_grad() const { return storage_ && storage_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { storage_->requires_grad = flag; }

bool Tensor::has_grad() const { return !storage_->grad.empty(); }

std::span<double> Tensor::grad() const {
  if (storage_->grad.size() != storage_->values.size()) {
    storage_->grad.assign(storage_->values.size(), 0.0);
  }
  return storage_->grad;
}

void Tensor::zero_grad() const { std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0); }

Tensor Tensor::clone() const { return Tensor(storage_->shape, storage_->values); }

void check_finite(const Tensor& t, std::string_view op) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericalFault(std::string(op) + " produced a non-finite value");
    }
  }
}

void Tape::record(Tensor& output, std::initializer_list<Tensor> inputs, BackwardFn backward) {
  record(output, std::vector<Tensor>(inputs), std::move(backward));
}

void Tape::record(Tensor& output, std::vector<Tensor> inputs, BackwardFn backward) {
  const bool needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                      [](const Tensor& t) { return t.requires_grad(); });
  if (!recording_ || !needs_grad) return;
  output.set_requires_grad(true);
  records_.push_back(Record{std::move(inputs), output, std::move(backward)});
}

void Tape::backward(Tensor loss) {
  if (loss.numel() != 1) {
    throw ShapeMismatch("backward() needs a scalar loss, got " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  loss.grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    // Outputs that received no gradient have nothing to propagate.
    if (!it->output.has_grad()) continue;
    it->backward();
  }
}

}  // namespace mfcm
