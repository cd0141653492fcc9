#include "train/losses.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "nets/networks.hpp"
#include "tensor/ops.hpp"

namespace focusfuse {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + a.shape().str() + " and " +
                     b.shape().str() + " differ");
  }
}

double clamp_prob(double p) { return std::clamp(p, kLogClamp, 1.0 - kLogClamp); }

// d/dp of -log(clamp(p)); zero where the clamp is active.
double neg_log_grad(double p) {
  return (p < kLogClamp || p > 1.0 - kLogClamp) ? 0.0 : -1.0 / p;
}

}  // namespace

Tensor content_loss(const Tensor& fake, const Tensor& real) {
  require_same(fake, real, "content_loss");
  const int64_t n = fake.numel();
  if (n == 0) throw ShapeError("content_loss of empty tensors");
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += std::abs(double(real.ptr()[i]) - double(fake.ptr()[i]));
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));
  if (Tape::should_record({&fake, &real})) {
    Tape::active()->record("content_loss", {fake, real}, out,
                           [fake, real, n](const Tensor& o) mutable {
      const float g = static_cast<float>(o.grad()[0] / static_cast<double>(n));
      auto sign = [](float d) { return d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f); };
      if (fake.requires_grad()) {
        auto gf = fake.grad_buffer();
        for (int64_t i = 0; i < n; ++i) gf[i] += g * sign(fake.ptr()[i] - real.ptr()[i]);
      }
      if (real.requires_grad()) {
        auto gr = real.grad_buffer();
        for (int64_t i = 0; i < n; ++i) gr[i] += g * sign(real.ptr()[i] - fake.ptr()[i]);
      }
    });
  }
  return out;
}

Tensor adversarial_loss(const Tensor& d_fake) {
  const int64_t n = d_fake.numel();
  if (n == 0) throw ShapeError("adversarial_loss of an empty tensor");
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc -= std::log(clamp_prob(d_fake.ptr()[i]));
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));
  if (Tape::should_record({&d_fake})) {
    Tape::active()->record("adversarial_loss", {d_fake}, out, [d_fake, n](const Tensor& o) mutable {
      const double g = o.grad()[0] / static_cast<double>(n);
      auto gd = d_fake.grad_buffer();
      for (int64_t i = 0; i < n; ++i) gd[i] += static_cast<float>(g * neg_log_grad(d_fake.ptr()[i]));
    });
  }
  return out;
}

Tensor generator_loss(const Tensor& fake, const Tensor& real, const Tensor& d_fake,
                      double lambda_adv) {
  if (lambda_adv < 0.0) throw UsageError("lambda_adv must be non-negative");
  return ops::add(content_loss(fake, real),
                  ops::scale(adversarial_loss(d_fake), static_cast<float>(lambda_adv)));
}

Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake) {
  require_same(d_real, d_fake, "discriminator_loss");
  const int64_t n = d_real.numel();
  if (n == 0) throw ShapeError("discriminator_loss of empty tensors");
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    acc -= std::log(clamp_prob(d_real.ptr()[i])) + std::log(clamp_prob(1.0 - d_fake.ptr()[i]));
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));
  if (Tape::should_record({&d_real, &d_fake})) {
    Tape::active()->record("discriminator_loss", {d_real, d_fake}, out,
                           [d_real, d_fake, n](const Tensor& o) mutable {
      const double g = o.grad()[0] / static_cast<double>(n);
      if (d_real.requires_grad()) {
        auto gr = d_real.grad_buffer();
        for (int64_t i = 0; i < n; ++i) gr[i] += static_cast<float>(g * neg_log_grad(d_real.ptr()[i]));
      }
      if (d_fake.requires_grad()) {
        auto gf = d_fake.grad_buffer();
        for (int64_t i = 0; i < n; ++i) {
          gf[i] -= static_cast<float>(g * neg_log_grad(1.0 - double(d_fake.ptr()[i])));
        }
      }
    });
  }
  return out;
}

Tensor bm_loss(const Tensor& logits, const Tensor& truth) {
  const Shape s = logits.shape();
  if (s.c != 2 || truth.shape() != Shape{s.n, 1, s.h, s.w}) {
    throw ShapeError("bm_loss expects [N,2,H,W] logits and [N,1,H,W] mask, got " + s.str() +
                     " and " + truth.shape().str());
  }
  const int64_t plane = s.plane();
  const int64_t count = s.n * plane;
  if (count == 0) throw ShapeError("bm_loss of empty tensors");
  for (float t : truth.data()) {
    if (t != 0.0f && t != 1.0f) throw UsageError("bm_loss truth mask must be 0/1");
  }
  // Probabilities of class 1, kept for backward.
  std::vector<double> p1(static_cast<size_t>(count));
  double acc = 0.0;
  for (int64_t n = 0; n < s.n; ++n) {
    const float* c0 = logits.ptr() + n * 2 * plane;
    const float* c1 = c0 + plane;
    for (int64_t i = 0; i < plane; ++i) {
      const double a = c0[i];
      const double b = c1[i];
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      const bool blurred = truth.ptr()[n * plane + i] == 1.0f;
      acc += lse - (blurred ? b : a);
      p1[static_cast<size_t>(n * plane + i)] = std::exp(b - lse);
    }
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(count)));
  if (Tape::should_record({&logits})) {
    Tape::active()->record("bm_loss", {logits}, out,
                           [logits, truth, p1 = std::move(p1), count, plane, s](const Tensor& o) mutable {
      const double g = o.grad()[0] / static_cast<double>(count);
      auto gl = logits.grad_buffer();
      for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t i = 0; i < plane; ++i) {
          const double q = p1[static_cast<size_t>(n * plane + i)];
          const double t = truth.ptr()[n * plane + i];
          // softmax - onehot, for both channels.
          gl[n * 2 * plane + i] += static_cast<float>(g * ((1.0 - q) - (1.0 - t)));
          gl[n * 2 * plane + plane + i] += static_cast<float>(g * (q - t));
        }
      }
    });
  }
  return out;
}

double pixel_accuracy(const Tensor& logits, const Tensor& truth) {
  const Tensor mask = binarize_mask(logits);
  if (mask.shape() != truth.shape()) throw ShapeError("pixel_accuracy: mask shape mismatch");
  int64_t hits = 0;
  for (int64_t i = 0; i < mask.numel(); ++i) hits += mask.ptr()[i] == truth.ptr()[i];
  return static_cast<double>(hits) / static_cast<double>(mask.numel());
}

}  // namespace focusfuse
