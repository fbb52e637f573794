#pragma once

#include <span>

#include "seppmix/nnet.hpp"
#include "seppmix/types.hpp"

namespace seppmix::nnet {

struct LossWeights {
    double alpha = 1.0;
    double beta = 0.5;
};

// Reduction over the four rotations inside the mixed classification loss:
// sum keeps each rotation's full contribution, mean divides by four.
enum class LmReduction { sum, mean };

// sum_k target_k * (-log softmax(logits)_k), computed through a stable
// log-sum-exp. Linear in the target, so a two-term mixed label decomposes
// into rho_a * CE(y_a) + rho_b * CE(y_b).
double soft_cross_entropy(std::span<const double> logits, const LabelDistribution& target);

// d_logits += scale * (softmax(logits) * mass(target) - target)
void soft_cross_entropy_grad(std::span<const double> logits, const LabelDistribution& target,
                             double scale, double* d_logits);

// Classification loss on mixed samples: every sample contributes its four
// rotations through the classification head against the mixed label;
// reduced per LmReduction over rotations and averaged over the batch.
double mixed_classification_loss(const Model& model, std::span<const MixedSample> batch,
                                 LmReduction reduction = LmReduction::sum);

// Auxiliary rotation loss: hard-label cross-entropy of the 4-way head over
// all four rotations, averaged over rotations and batch items.
double rotation_loss(const Model& model, std::span<const MixedSample> batch);

// alpha * l_m + beta * l_r
double total_loss(double l_m, double l_r, const LossWeights& w);

} // namespace seppmix::nnet
