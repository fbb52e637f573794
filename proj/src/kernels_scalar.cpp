// Scalar reference kernels. These define the semantics the AVX2 variants
// are equivalence-tested against.

#include <algorithm>
#include <cstddef>
#include <cstdint>

#include "seppmix/kernels.hpp"

namespace seppmix::kernels {
namespace {

void s_axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_add(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void s_scal(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_lerp(std::size_t n, double t, const double* a, const double* b, double* out) {
    const double u = 1.0 - t;
    for (std::size_t i = 0; i < n; ++i) out[i] = t * a[i] + u * b[i];
}

void s_blend(std::size_t n, const std::uint8_t* mask, const double* a, const double* b, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] ? a[i] : b[i];
}

double s_dot(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double s_sum(std::size_t n, const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double s_masked_sum(std::size_t n, const std::uint8_t* mask, const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) s += x[i];
    return s;
}

void s_minmax(std::size_t n, const double* x, double* mn, double* mx) {
    double lo = x[0], hi = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    *mn = lo;
    *mx = hi;
}

void s_relu_fwd(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_relu_bwd(std::size_t n, const double* x, const double* dy, double* dx) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

void s_sgd_step(std::size_t n, double* p, const double* g, double* v, double lr, double mom, double wd) {
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = mom * v[i] + g[i] + wd * p[i];
        p[i] -= lr * v[i];
    }
}

void s_conv3x3_fwd(const double* in_pad, int c, int h, int w,
                   const double* weights, const double* bias, double* out, int oc) {
    const int pw = w + 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(h + 2) * pw;
    for (int o = 0; o < oc; ++o) {
        double* op = out + o * plane;
        std::fill(op, op + plane, bias ? bias[o] : 0.0);
        for (int ic = 0; ic < c; ++ic) {
            const double* ip = in_pad + ic * pplane;
            const double* wk = weights + (static_cast<std::size_t>(o) * c + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = wk[ky * 3 + kx];
                    for (int y = 0; y < h; ++y) {
                        const double* src = ip + static_cast<std::size_t>(y + ky) * pw + kx;
                        double* dst = op + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

void s_conv3x3_bwd_data(const double* d_out, int c, int h, int w,
                        const double* weights, double* d_in_pad, int oc) {
    const int pw = w + 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(h + 2) * pw;
    for (int o = 0; o < oc; ++o) {
        const double* dop = d_out + o * plane;
        for (int ic = 0; ic < c; ++ic) {
            double* dip = d_in_pad + ic * pplane;
            const double* wk = weights + (static_cast<std::size_t>(o) * c + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = wk[ky * 3 + kx];
                    for (int y = 0; y < h; ++y) {
                        double* dst = dip + static_cast<std::size_t>(y + ky) * pw + kx;
                        const double* src = dop + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

void s_conv3x3_bwd_weights(const double* in_pad, const double* d_out, int c, int h, int w,
                           double* d_weights, double* d_bias, int oc) {
    const int pw = w + 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(h + 2) * pw;
    for (int o = 0; o < oc; ++o) {
        const double* dop = d_out + o * plane;
        if (d_bias) {
            double s = 0.0;
            for (std::size_t i = 0; i < plane; ++i) s += dop[i];
            d_bias[o] += s;
        }
        for (int ic = 0; ic < c; ++ic) {
            const double* ip = in_pad + ic * pplane;
            double* dwk = d_weights + (static_cast<std::size_t>(o) * c + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double s = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const double* src = ip + static_cast<std::size_t>(y + ky) * pw + kx;
                        const double* dst = dop + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) s += src[x] * dst[x];
                    }
                    dwk[ky * 3 + kx] += s;
                }
            }
        }
    }
}

} // namespace

const Ops& scalar_ops() {
    static const Ops table = {
        s_axpy, s_add, s_scal, s_lerp, s_blend, s_dot, s_sum, s_masked_sum,
        s_minmax, s_relu_fwd, s_relu_bwd, s_sgd_step,
        s_conv3x3_fwd, s_conv3x3_bwd_data, s_conv3x3_bwd_weights,
    };
    return table;
}

} // namespace seppmix::kernels
