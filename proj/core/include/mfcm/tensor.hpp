#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfcm {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major array of doubles with an optional gradient buffer.
//
// A Tensor is a handle: copies share storage, as with most autograd
// libraries. Use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<double> data();
  std::span<const double> data() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  // Gradient buffer, allocated as zeros on first access. The buffer belongs
  // to the shared storage, so const handles may accumulate into it.
  std::span<double> grad() const;
  void zero_grad() const;

  Tensor clone() const;
  bool shares_storage(const Tensor& other) const { return storage_ == other.storage_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
};

// Throws NumericalFault naming `op` when any entry is NaN or infinite.
void check_finite(const Tensor& t, std::string_view op);

// Ordered record of differentiable operations. Ops append a record only when
// one of their inputs requires a gradient; backward() replays the records in
// exact reverse order. A tape and the tensors on it belong to one thread.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  // Registers `output` as computed from `inputs`. The output is marked as
  // requiring a gradient iff some input does. `backward` reads the output
  // gradient and accumulates into the inputs' gradients.
  void record(Tensor& output, std::initializer_list<Tensor> inputs, BackwardFn backward);
  void record(Tensor& output, std::vector<Tensor> inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and runs every record in reverse.
  void backward(Tensor loss);

  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

 private:
  struct Record {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Record> records_;
  bool recording_;
};

}  // namespace mfcm
