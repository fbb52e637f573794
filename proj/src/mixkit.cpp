#include "seppmix/mixkit.hpp"
#include <algorithm>

#include <cmath>
#include <string>

#include "seppmix/kernels.hpp"

namespace seppmix::mixkit {
namespace {

void require_same_shape(const Image& a, const Image& b, const char* op) {
    if (a.height != b.height || a.width != b.width)
        throw InputDomainError(std::string(op) + ": image shapes differ");
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

} // namespace

LabelDistribution one_hot(int class_id, int num_classes) {
    if (num_classes < 1) throw InputDomainError("one_hot: num_classes must be positive");
    if (class_id < 0 || class_id >= num_classes)
        throw InputDomainError("one_hot: class_id " + std::to_string(class_id) +
                               " out of range [0, " + std::to_string(num_classes) + ")");
    LabelDistribution y(num_classes);
    y.weights[static_cast<std::size_t>(class_id)] = 1.0;
    return y;
}

PatchGridMask sample_patch_mask(int grid_n, SeededRng& rng) {
    if (grid_n < 1) throw InputDomainError("sample_patch_mask: grid_n must be >= 1");
    PatchGridMask m(grid_n);
    for (auto& cell : m.cells) cell = rng.bernoulli(0.5) ? 1 : 0;
    return m;
}

PixelMask upsample_mask(const PatchGridMask& mask, int height, int width) {
    if (mask.grid_n < 1) throw InputDomainError("upsample_mask: empty mask");
    if (height < mask.grid_n || width < mask.grid_n)
        throw InputDomainError("upsample_mask: target dimensions smaller than grid");
    PixelMask out(height, width);
    const int n = mask.grid_n;
    for (int y = 0; y < height; ++y) {
        const int gy = static_cast<int>(static_cast<std::int64_t>(y) * n / height);
        for (int x = 0; x < width; ++x) {
            const int gx = static_cast<int>(static_cast<std::int64_t>(x) * n / width);
            out.at(y, x) = mask.at(gy, gx);
        }
    }
    return out;
}

Image mix_images(const Image& a, const Image& b, const PixelMask& pixel_mask) {
    require_same_shape(a, b, "mix_images");
    if (pixel_mask.height != a.height || pixel_mask.width != a.width)
        throw InputDomainError("mix_images: mask shape differs from images");
    Image out(a.height, a.width);
    const auto& k = kernels::ops();
    const std::size_t plane = a.pixels();
    for (int c = 0; c < 3; ++c)
        k.blend(plane, pixel_mask.data.data(), a.channel(c), b.channel(c), out.channel(c));
    return out;
}

LabelDistribution combine_labels(const LabelDistribution& y_a, const LabelDistribution& y_b,
                                 double rho_a, double rho_b) {
    if (!(rho_a >= 0.0 && rho_a <= 1.0) || !(rho_b >= 0.0 && rho_b <= 1.0))
        throw InputDomainError("combine_labels: weights must lie in [0, 1]");
    if (y_a.size() != y_b.size())
        throw InputDomainError("combine_labels: label sizes differ");
    LabelDistribution out(y_a.size());
    for (int i = 0; i < out.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.weights[k] = rho_a * y_a.weights[k] + rho_b * y_b.weights[k];
    }
    return out;
}

MixedSample seppmix(const Image& x_a, int y_a, const Image& x_b, int y_b,
                    const SemanticMap& s_a, const SemanticMap& s_b,
                    int num_classes, int grid_n, SeededRng& rng) {
    require_same_shape(x_a, x_b, "seppmix");
    if (s_a.height != x_a.height || s_a.width != x_a.width ||
        s_b.height != x_b.height || s_b.width != x_b.width)
        throw InputDomainError("seppmix: semantic map shape differs from images");
    const PatchGridMask mask = sample_patch_mask(grid_n, rng);
    const PixelMask px = upsample_mask(mask, x_a.height, x_a.width);
    const PixelMask px_c = complement(px);
    const auto& k = kernels::ops();
    // Unit-mass maps can overshoot 1 by an ulp under summation; the label
    // weights are defined on [0, 1].
    const double rho_a =
        std::clamp(k.masked_sum(px.data.size(), px.data.data(), s_a.data.data()), 0.0, 1.0);
    const double rho_b =
        std::clamp(k.masked_sum(px_c.data.size(), px_c.data.data(), s_b.data.data()), 0.0, 1.0);

    MixedSample out;
    out.image = mix_images(x_a, x_b, px);
    out.label = combine_labels(one_hot(y_a, num_classes), one_hot(y_b, num_classes), rho_a, rho_b);
    out.prov = {y_a, y_b, -1, -1, mask, {}, 0.0, rho_a, rho_b, MixerKind::seppmix};
    return out;
}

MixedSample patchmix(const Image& x_a, int y_a, const Image& x_b, int y_b,
                     int num_classes, int grid_n, SeededRng& rng) {
    require_same_shape(x_a, x_b, "patchmix");
    const PatchGridMask mask = sample_patch_mask(grid_n, rng);
    const PixelMask px = upsample_mask(mask, x_a.height, x_a.width);
    std::size_t ones = 0;
    for (auto v : px.data) ones += v;
    const double rho_a = static_cast<double>(ones) / static_cast<double>(px.data.size());
    const double rho_b = 1.0 - rho_a;

    MixedSample out;
    out.image = mix_images(x_a, x_b, px);
    out.label = combine_labels(one_hot(y_a, num_classes), one_hot(y_b, num_classes), rho_a, rho_b);
    out.prov = {y_a, y_b, -1, -1, mask, {}, 0.0, rho_a, rho_b, MixerKind::patchmix};
    return out;
}

MixedSample mixup(const Image& x_a, int y_a, const Image& x_b, int y_b,
                  int num_classes, double lambda) {
    require_same_shape(x_a, x_b, "mixup");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw InputDomainError("mixup: lambda must lie in [0, 1]");
    MixedSample out;
    out.image = Image(x_a.height, x_a.width);
    kernels::ops().lerp(x_a.data.size(), lambda, x_a.data.data(), x_b.data.data(),
                        out.image.data.data());
    out.label = combine_labels(one_hot(y_a, num_classes), one_hot(y_b, num_classes),
                               lambda, 1.0 - lambda);
    out.prov = {y_a, y_b, -1, -1, {}, {}, lambda, lambda, 1.0 - lambda, MixerKind::mixup};
    return out;
}

MixedSample cutmix(const Image& x_a, int y_a, const Image& x_b, int y_b,
                   int num_classes, SeededRng& rng, double alpha) {
    require_same_shape(x_a, x_b, "cutmix");
    const int h = x_a.height, w = x_a.width;
    const double lambda = rng.beta(alpha, alpha);
    const double side = std::sqrt(1.0 - lambda);
    const int cut_w = static_cast<int>(w * side);
    const int cut_h = static_cast<int>(h * side);
    const int cx = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(w)));
    const int cy = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(h)));
    PixelBox box;
    box.x1 = clampi(cx - cut_w / 2, 0, w);
    box.x2 = clampi(cx + cut_w / 2, 0, w);
    box.y1 = clampi(cy - cut_h / 2, 0, h);
    box.y2 = clampi(cy + cut_h / 2, 0, h);

    MixedSample out;
    out.image = x_a;
    for (int c = 0; c < 3; ++c) {
        for (int y = box.y1; y < box.y2; ++y) {
            double* dst = out.image.channel(c) + static_cast<std::size_t>(y) * w + box.x1;
            const double* src = x_b.channel(c) + static_cast<std::size_t>(y) * w + box.x1;
            for (int x = 0; x < box.x2 - box.x1; ++x) dst[x] = src[x];
        }
    }
    const double rho_b = static_cast<double>(box.area()) / (static_cast<double>(h) * w);
    const double rho_a = 1.0 - rho_b;
    out.label = combine_labels(one_hot(y_a, num_classes), one_hot(y_b, num_classes), rho_a, rho_b);
    out.prov = {y_a, y_b, -1, -1, {}, box, lambda, rho_a, rho_b, MixerKind::cutmix};
    return out;
}

} // namespace seppmix::mixkit
