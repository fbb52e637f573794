#include "seppmix/cam.hpp"

#include <cmath>

#include "seppmix/interp.hpp"
#include "seppmix/kernels.hpp"

namespace seppmix::cam {

Map2D compute_cam(const FeatureStack& features, const ClassifierWeights& weights,
                  int class_id, int out_h, int out_w) {
    if (features.count < 1 || features.height < 1 || features.width < 1)
        throw InputDomainError("compute_cam: empty feature stack");
    if (weights.channels != features.count)
        throw InputDomainError("compute_cam: weight length differs from feature count");
    if (class_id < 0 || class_id >= weights.num_classes)
        throw InputDomainError("compute_cam: class_id out of range");
    if (out_h < features.height || out_w < features.width)
        throw InputDomainError("compute_cam: output dimensions below feature dimensions");

    Map2D raw(features.height, features.width);
    const double* row = weights.row(class_id);
    const auto& k = kernels::ops();
    const std::size_t plane = raw.data.size();
    for (int l = 0; l < features.count; ++l)
        k.axpy(plane, row[l], features.map(l), raw.data.data());
    if (out_h == features.height && out_w == features.width) return raw;
    return bilinear_resize(raw, out_h, out_w);
}

SemanticMap normalize_to_semantic_map(const Map2D& raw) {
    if (raw.data.empty()) throw InputDomainError("normalize_to_semantic_map: empty map");
    for (double v : raw.data)
        if (!std::isfinite(v)) throw InputDomainError("normalize_to_semantic_map: non-finite input");

    const auto& k = kernels::ops();
    double mn = 0.0, mx = 0.0;
    k.minmax(raw.data.size(), raw.data.data(), &mn, &mx);
    const double shift = mn < 0.0 ? -mn : 0.0;

    SemanticMap out(raw.height, raw.width);
    double total = 0.0;
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        out.data[i] = raw.data[i] + shift;
        total += out.data[i];
    }
    if (total <= 1e-12) {
        const double u = 1.0 / static_cast<double>(out.data.size());
        for (auto& v : out.data) v = u;
        return out;
    }
    k.scal(out.data.size(), 1.0 / total, out.data.data());
    return out;
}

double semantic_proportion(const PixelMask& pixel_mask, const SemanticMap& s) {
    if (pixel_mask.height != s.height || pixel_mask.width != s.width)
        throw InputDomainError("semantic_proportion: shapes differ");
    return kernels::ops().masked_sum(s.data.size(), pixel_mask.data.data(), s.data.data());
}

} // namespace seppmix::cam
