#include "seppmix/losses.hpp"

#include <cmath>
#include <vector>

#include "seppmix/rotation.hpp"

namespace seppmix::nnet {
namespace {

double log_sum_exp(std::span<const double> logits) {
    double m = logits[0];
    for (double z : logits) m = std::max(m, z);
    double s = 0.0;
    for (double z : logits) s += std::exp(z - m);
    return m + std::log(s);
}

void check_finite(std::span<const double> logits) {
    for (double z : logits)
        if (!std::isfinite(z)) throw NumericalError("cross-entropy: non-finite logits");
}

} // namespace

double soft_cross_entropy(std::span<const double> logits, const LabelDistribution& target) {
    if (logits.empty() || static_cast<int>(logits.size()) != target.size())
        throw InputDomainError("soft_cross_entropy: logit/target size mismatch");
    check_finite(logits);
    const double lse = log_sum_exp(logits);
    double loss = 0.0;
    for (int k = 0; k < target.size(); ++k) {
        const double t = target.weights[static_cast<std::size_t>(k)];
        if (t != 0.0) loss += t * (lse - logits[static_cast<std::size_t>(k)]);
    }
    return loss;
}

void soft_cross_entropy_grad(std::span<const double> logits, const LabelDistribution& target,
                             double scale, double* d_logits) {
    check_finite(logits);
    const double lse = log_sum_exp(logits);
    const double mass = target.mass();
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double p = std::exp(logits[k] - lse);
        d_logits[k] += scale * (p * mass - target.weights[k]);
    }
}

double mixed_classification_loss(const Model& model, std::span<const MixedSample> batch,
                                 LmReduction reduction) {
    if (batch.empty()) throw InputDomainError("mixed_classification_loss: empty batch");
    std::vector<double> logits(static_cast<std::size_t>(model.num_classes()));
    double total = 0.0;
    for (const auto& sample : batch) {
        const auto rotated = rotation::expand_with_rotations(sample);
        double per_item = 0.0;
        for (const auto& r : rotated) {
            const auto emb = model.embed(r.image);
            model.cls_logits(emb.data(), logits.data());
            per_item += soft_cross_entropy(logits, r.label);
        }
        if (reduction == LmReduction::mean) per_item *= 0.25;
        total += per_item;
    }
    return total / static_cast<double>(batch.size());
}

double rotation_loss(const Model& model, std::span<const MixedSample> batch) {
    if (batch.empty()) throw InputDomainError("rotation_loss: empty batch");
    std::vector<double> logits(4);
    double total = 0.0;
    for (const auto& sample : batch) {
        const auto rotated = rotation::expand_with_rotations(sample);
        double per_item = 0.0;
        for (const auto& r : rotated) {
            const auto emb = model.embed(r.image);
            model.rot_logits(emb.data(), logits.data());
            LabelDistribution t(4);
            t.weights[static_cast<std::size_t>(r.rotation_target)] = 1.0;
            per_item += soft_cross_entropy(logits, t);
        }
        total += per_item * 0.25;
    }
    return total / static_cast<double>(batch.size());
}

double total_loss(double l_m, double l_r, const LossWeights& w) {
    if (!std::isfinite(l_m) || !std::isfinite(l_r))
        throw NumericalError("total_loss: non-finite inputs");
    return w.alpha * l_m + w.beta * l_r;
}

} // namespace seppmix::nnet
