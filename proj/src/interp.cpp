#include "seppmix/interp.hpp"

#include <cmath>

#include "seppmix/common.hpp"

namespace seppmix {
namespace {

struct Tap {
    int lo;
    int hi;
    double t;
};

Tap tap_for(int out_i, int out_n, int in_n) {
    if (out_n == 1 || in_n == 1) return {0, 0, 0.0};
    const double src = static_cast<double>(out_i) * (in_n - 1) / (out_n - 1);
    int lo = static_cast<int>(std::floor(src));
    if (lo > in_n - 2) lo = in_n - 2;
    return {lo, lo + 1, src - lo};
}

void resize_plane(const double* in, int in_h, int in_w, double* out, int out_h, int out_w) {
    for (int y = 0; y < out_h; ++y) {
        const Tap ty = tap_for(y, out_h, in_h);
        const double* r0 = in + static_cast<std::size_t>(ty.lo) * in_w;
        const double* r1 = in + static_cast<std::size_t>(ty.hi) * in_w;
        double* orow = out + static_cast<std::size_t>(y) * out_w;
        for (int x = 0; x < out_w; ++x) {
            const Tap tx = tap_for(x, out_w, in_w);
            const double v0 = r0[tx.lo] + tx.t * (r0[tx.hi] - r0[tx.lo]);
            const double v1 = r1[tx.lo] + tx.t * (r1[tx.hi] - r1[tx.lo]);
            orow[x] = v0 + ty.t * (v1 - v0);
        }
    }
}

} // namespace

Map2D bilinear_resize(const Map2D& in, int out_h, int out_w) {
    if (in.height < 1 || in.width < 1 || out_h < 1 || out_w < 1)
        throw InputDomainError("bilinear_resize: dimensions must be positive");
    Map2D out(out_h, out_w);
    resize_plane(in.data.data(), in.height, in.width, out.data.data(), out_h, out_w);
    return out;
}

Image bilinear_resize(const Image& in, int out_h, int out_w) {
    if (in.height < 1 || in.width < 1 || out_h < 1 || out_w < 1)
        throw InputDomainError("bilinear_resize: dimensions must be positive");
    Image out(out_h, out_w);
    for (int c = 0; c < 3; ++c)
        resize_plane(in.channel(c), in.height, in.width, out.channel(c), out_h, out_w);
    return out;
}

} // namespace seppmix
