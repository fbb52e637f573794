#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seppmix/common.hpp"

namespace seppmix {

// Planar RGB image, values in [0, 1]. Channel count is fixed at 3.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data; // 3 * height * width, channel-major

    Image() = default;
    Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, 0.0) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    const double* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * height * width; }
    double* channel(int c) { return data.data() + static_cast<std::size_t>(c) * height * width; }
    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
};

// Dense H x W map of reals (raw activation maps, heat values).
struct Map2D {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Map2D() = default;
    Map2D(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {}

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Non-negative map summing to one; per-image semantic weight.
struct SemanticMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    SemanticMap() = default;
    SemanticMap(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {}

    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Binary pixel mask (0/1 bytes).
struct PixelMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    PixelMask() = default;
    PixelMask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// grid_n x grid_n binary patch-provenance grid.
struct PatchGridMask {
    int grid_n = 0;
    std::vector<std::uint8_t> cells; // row-major

    PatchGridMask() = default;
    explicit PatchGridMask(int n) : grid_n(n), cells(static_cast<std::size_t>(n) * n, 0) {}

    std::uint8_t at(int r, int c) const { return cells[static_cast<std::size_t>(r) * grid_n + c]; }
    std::uint8_t& at(int r, int c) { return cells[static_cast<std::size_t>(r) * grid_n + c]; }
    int ones() const {
        int k = 0;
        for (auto v : cells) k += v;
        return k;
    }
};

inline PatchGridMask complement(const PatchGridMask& m) {
    PatchGridMask out = m;
    for (auto& v : out.cells) v = v ? 0 : 1;
    return out;
}

inline PixelMask complement(const PixelMask& m) {
    PixelMask out = m;
    for (auto& v : out.data) v = v ? 0 : 1;
    return out;
}

// Non-negative weight vector over base classes. One-hot for raw samples,
// two nonzero terms (rho_a, rho_b) for mixed samples.
struct LabelDistribution {
    std::vector<double> weights;

    LabelDistribution() = default;
    explicit LabelDistribution(int num_classes) : weights(static_cast<std::size_t>(num_classes), 0.0) {}

    int size() const { return static_cast<int>(weights.size()); }
    double mass() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
    // Ties break toward the lowest class index.
    int argmax() const {
        int best = 0;
        for (int i = 1; i < size(); ++i)
            if (weights[static_cast<std::size_t>(i)] > weights[static_cast<std::size_t>(best)]) best = i;
        return best;
    }
};

// Stack of c feature maps sharing one spatial shape.
struct FeatureStack {
    int count = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data; // count * height * width

    FeatureStack() = default;
    FeatureStack(int c, int h, int w)
        : count(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0) {}

    const double* map(int l) const { return data.data() + static_cast<std::size_t>(l) * height * width; }
    double* map(int l) { return data.data() + static_cast<std::size_t>(l) * height * width; }
};

// Per-class weight rows over feature maps; bias excluded.
struct ClassifierWeights {
    int num_classes = 0;
    int channels = 0;
    std::vector<double> data; // num_classes * channels, row-major

    const double* row(int cls) const { return data.data() + static_cast<std::size_t>(cls) * channels; }
};

enum class MixerKind { none, mixup, cutmix, patchmix, seppmix };

const char* mixer_name(MixerKind k);
MixerKind mixer_from_name(const std::string& name);

// Axis-aligned half-open pixel box [x1,x2) x [y1,y2); used by cutmix.
struct PixelBox {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    int area() const { return (x2 - x1) * (y2 - y1); }
};

struct MixProvenance {
    int class_a = -1;
    int class_b = -1;
    int source_a = -1; // dataset instance indices, filled by callers that have them
    int source_b = -1;
    PatchGridMask mask;  // patch mixers
    PixelBox box;        // cutmix
    double lambda = 0.0; // mixup / cutmix draw
    double rho_a = 0.0;
    double rho_b = 0.0;
    MixerKind kind = MixerKind::none;
};

struct MixedSample {
    Image image;
    LabelDistribution label;
    MixProvenance prov;
};

} // namespace seppmix
