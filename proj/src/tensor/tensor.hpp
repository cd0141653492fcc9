#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tensor/precision.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {

// [N, C, H, W]
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }
  int64_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense single-precision 4-D array with an optional gradient buffer.
//
// Tensor is a reference-counted handle: copies alias the same storage, which
// is what lets the tape hold on to op inputs. Use clone() for a deep copy.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, real fill = 0.0f);
  Tensor(Shape shape, std::vector<real> values);

  static Tensor scalar(real value);

  const Shape& shape() const { return impl_->shape; }
  int64_t numel() const { return impl_->shape.numel(); }
  bool empty() const { return numel() == 0; }

  std::span<real> data() { return impl_->data; }
  std::span<const real> data() const { return impl_->data; }
  real* ptr() { return impl_->data.data(); }
  const real* ptr() const { return impl_->data.data(); }

  real& at(int64_t n, int64_t c, int64_t h, int64_t w);
  real at(int64_t n, int64_t c, int64_t h, int64_t w) const;
  // Value of a [1,1,1,1] tensor.
  real item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<real> grad() { return impl_->grad; }
  std::span<const real> grad() const { return impl_->grad; }
  // Returns the gradient buffer, allocating it zero-filled on first use.
  // Gradients are accumulation state, writable through const handles.
  std::span<real> grad_buffer() const;
  void zero_grad();
  void clear_grad() { std::vector<real>().swap(impl_->grad); }

  // Deep copy of the values; the copy has no gradient and is not on a tape.
  Tensor clone() const;
  // Same values, cut from the tape (requires_grad false).
  Tensor detach() const { return clone(); }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  // Number of handles sharing this storage (tape nodes included).
  long use_count() const { return impl_.use_count(); }

 private:
  struct Impl {
    Shape shape;
    std::vector<real> data;
    std::vector<real> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

// Ordered record of differentiable operations.
//
// Ops record themselves on the tape that is active on the calling thread
// (see Tape::Scope) whenever at least one input requires a gradient. With no
// active tape, ops run in pure inference mode and save nothing.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& output)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  // Makes `tape` the active tape for the current thread until destruction.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active();

  // True when an op over `inputs` should record itself.
  static bool should_record(std::initializer_list<const Tensor*> inputs);
  static bool should_record(std::span<const Tensor> inputs);

  void record(std::string_view op, std::vector<Tensor> inputs, Tensor output,
              BackwardFn backward);

  // Propagates d(root)/d(.) to every reachable requires_grad tensor. `root`
  // must be a [1,1,1,1] output recorded on this tape. Gradients of leaf
  // tensors accumulate; those of intermediates are released once consumed.
  void backward(const Tensor& root);

  // Drops all nodes and their saved intermediates; allows a new backward.
  void clear();

  size_t size() const { return nodes_.size(); }
  std::vector<std::string_view> op_names() const;

 private:
  struct Node {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace focusfuse::FOCUSFUSE_PRECISION
