#pragma once

#include "tensor/tensor.hpp"

// Scalar losses of the fusion GAN and the blur model. Each returns a
// [1,1,1,1] tensor and records a single fused node on the active tape.
namespace focusfuse {

// Probabilities are clamped to [eps, 1 - eps] before taking logs.
constexpr double kLogClamp = 1e-7;

// mean |real - fake| over every element.
Tensor content_loss(const Tensor& fake, const Tensor& real);

// mean -log D(fake) over batch and patch positions.
Tensor adversarial_loss(const Tensor& d_fake);

// content_loss + lambda * adversarial_loss.
Tensor generator_loss(const Tensor& fake, const Tensor& real, const Tensor& d_fake,
                      double lambda_adv);

// -mean[log D(real) + log(1 - D(fake))] over batch and patch positions.
Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake);

// Mean per-pixel softmax cross-entropy of [N,2,H,W] logits against a
// [N,1,H,W] {0,1} mask.
Tensor bm_loss(const Tensor& logits, const Tensor& truth);

// Fraction of pixels whose argmax class equals the mask.
double pixel_accuracy(const Tensor& logits, const Tensor& truth);

}  // namespace focusfuse
