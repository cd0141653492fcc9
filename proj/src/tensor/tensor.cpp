#include "tensor/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "common/error.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {

std::string Shape::str() const {
  std::ostringstream os;
  os << '[' << n << ',' << c << ',' << h << ',' << w << ']';
  return os.str();
}

Tensor::Tensor() : impl_(std::make_shared<Impl>()) {}

Tensor::Tensor(Shape shape, real fill) : impl_(std::make_shared<Impl>()) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor dimension " + shape.str());
  }
  impl_->shape = shape;
  impl_->data.assign(static_cast<size_t>(shape.numel()), fill);
}

Tensor::Tensor(Shape shape, std::vector<real> values) : impl_(std::make_shared<Impl>()) {
  if (static_cast<int64_t>(values.size()) != shape.numel()) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape.str());
  }
  impl_->shape = shape;
  impl_->data = std::move(values);
}

Tensor Tensor::scalar(real value) { return Tensor(Shape{1, 1, 1, 1}, value); }

real& Tensor::at(int64_t n, int64_t c, int64_t h, int64_t w) {
  const Shape& s = impl_->shape;
  return impl_->data[static_cast<size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
}

real Tensor::at(int64_t n, int64_t c, int64_t h, int64_t w) const {
  const Shape& s = impl_->shape;
  return impl_->data[static_cast<size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
}

real Tensor::item() const {
  if (numel() != 1) throw UsageError("item() on non-scalar tensor " + shape().str());
  return impl_->data[0];
}

std::span<real> Tensor::grad_buffer() const {
  if (impl_->grad.empty() && !impl_->data.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

Tensor Tensor::clone() const { return Tensor(impl_->shape, impl_->data); }

// ---------------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::~Tape() {
  if (g_active_tape == this) g_active_tape = nullptr;
}

Tape::Scope::Scope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

Tape::Scope::~Scope() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

bool Tape::should_record(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t != nullptr && t->requires_grad(); });
}

bool Tape::should_record(std::span<const Tensor> inputs) {
  if (g_active_tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.requires_grad(); });
}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor output,
                  BackwardFn backward) {
  if (consumed_) {
    throw UsageError("tape already consumed by backward(); call clear() before recording");
  }
  output.set_requires_grad(true);
  nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& root) {
  if (root.shape() != Shape{1, 1, 1, 1}) {
    throw UsageError("backward() root must be a [1,1,1,1] scalar, got " + root.shape().str());
  }
  if (consumed_) {
    throw UsageError("backward() called twice on the same recording");
  }
  auto it = std::find_if(nodes_.rbegin(), nodes_.rend(),
                         [&](const Node& n) { return n.output.same_storage(root); });
  if (it == nodes_.rend()) {
    throw UsageError("backward() root was not produced on this tape");
  }
  consumed_ = true;

  Tensor seed = it->output;
  seed.grad_buffer()[0] += 1.0f;

  for (auto node = nodes_.rbegin(); node != nodes_.rend(); ++node) {
    if (!node->output.has_grad()) continue;
    node->backward(node->output);
    node->output.clear_grad();
  }
}

void Tape::clear() {
  nodes_.clear();
  nodes_.shrink_to_fit();
  consumed_ = false;
}

std::vector<std::string_view> Tape::op_names() const {
  std::vector<std::string_view> names;
  names.reserve(nodes_.size());
  for (const auto& n : nodes_) names.push_back(n.op);
  return names;
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION
