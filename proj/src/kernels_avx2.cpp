// AVX2+FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; callers reach it through the dispatch table after the
// cpuid check, so no AVX instruction executes on unsupported hardware.

#include "seppmix/kernels.hpp"

#if defined(SEPPMIX_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cstring>

namespace seppmix::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

// Expand 4 mask bytes into 4 all-ones/all-zeros double lanes.
inline __m256d mask4(const std::uint8_t* m) {
    std::uint32_t packed;
    std::memcpy(&packed, m, 4);
    __m128i bytes = _mm_cvtsi32_si128(static_cast<int>(packed));
    __m256i lanes = _mm256_cvtepu8_epi64(bytes);
    return _mm256_castsi256_pd(_mm256_cmpgt_epi64(lanes, _mm256_setzero_si256()));
}

void v_axpy(std::size_t n, double a, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_add(std::size_t n, const double* x, double* y) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void v_scal(std::size_t n, double a, double* x) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void v_lerp(std::size_t n, double t, const double* a, const double* b, double* out) {
    const __m256d tv = _mm256_set1_pd(t);
    const __m256d uv = _mm256_set1_pd(1.0 - t);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_mul_pd(uv, _mm256_loadu_pd(b + i));
        r = _mm256_fmadd_pd(tv, _mm256_loadu_pd(a + i), r);
        _mm256_storeu_pd(out + i, r);
    }
    const double u = 1.0 - t;
    for (; i < n; ++i) out[i] = t * a[i] + u * b[i];
}

void v_blend(std::size_t n, const std::uint8_t* mask, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d sel = mask4(mask + i);
        _mm256_storeu_pd(out + i,
                         _mm256_blendv_pd(_mm256_loadu_pd(b + i), _mm256_loadu_pd(a + i), sel));
    }
    for (; i < n; ++i) out[i] = mask[i] ? a[i] : b[i];
}

double v_dot(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double v_sum(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double v_masked_sum(std::size_t n, const std::uint8_t* mask, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_and_pd(mask4(mask + i), _mm256_loadu_pd(x + i)));
    double s = hsum(acc);
    for (; i < n; ++i)
        if (mask[i]) s += x[i];
    return s;
}

void v_minmax(std::size_t n, const double* x, double* mn, double* mx) {
    if (n < 4) {
        double lo = x[0], hi = x[0];
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
        *mn = lo;
        *mx = hi;
        return;
    }
    __m256d vlo = _mm256_loadu_pd(x);
    __m256d vhi = vlo;
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        vlo = _mm256_min_pd(vlo, v);
        vhi = _mm256_max_pd(vhi, v);
    }
    alignas(32) double lo4[4], hi4[4];
    _mm256_store_pd(lo4, vlo);
    _mm256_store_pd(hi4, vhi);
    double lo = std::min(std::min(lo4[0], lo4[1]), std::min(lo4[2], lo4[3]));
    double hi = std::max(std::max(hi4[0], hi4[1]), std::max(hi4[2], hi4[3]));
    for (; i < n; ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    *mn = lo;
    *mx = hi;
}

void v_relu_fwd(std::size_t n, const double* x, double* y) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_relu_bwd(std::size_t n, const double* x, const double* dy, double* dx) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gate = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d g = _mm256_and_pd(gate, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

void v_sgd_step(std::size_t n, double* p, const double* g, double* v, double lr, double mom, double wd) {
    const __m256d momv = _mm256_set1_pd(mom);
    const __m256d wdv = _mm256_set1_pd(wd);
    const __m256d lrv = _mm256_set1_pd(lr);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d pv = _mm256_loadu_pd(p + i);
        __m256d t = _mm256_fmadd_pd(wdv, pv, _mm256_loadu_pd(g + i));
        __m256d vv = _mm256_fmadd_pd(momv, _mm256_loadu_pd(v + i), t);
        _mm256_storeu_pd(v + i, vv);
        _mm256_storeu_pd(p + i, _mm256_fnmadd_pd(lrv, vv, pv));
    }
    for (; i < n; ++i) {
        v[i] = mom * v[i] + g[i] + wd * p[i];
        p[i] -= lr * v[i];
    }
}

void v_conv3x3_fwd(const double* in_pad, int c, int h, int w,
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
                    const __m256d wvv = _mm256_set1_pd(wv);
                    for (int y = 0; y < h; ++y) {
                        const double* src = ip + static_cast<std::size_t>(y + ky) * pw + kx;
                        double* dst = op + static_cast<std::size_t>(y) * w;
                        int x = 0;
                        for (; x + 4 <= w; x += 4) {
                            __m256d d = _mm256_loadu_pd(dst + x);
                            d = _mm256_fmadd_pd(wvv, _mm256_loadu_pd(src + x), d);
                            _mm256_storeu_pd(dst + x, d);
                        }
                        for (; x < w; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

void v_conv3x3_bwd_data(const double* d_out, int c, int h, int w,
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
                    const __m256d wvv = _mm256_set1_pd(wv);
                    for (int y = 0; y < h; ++y) {
                        double* dst = dip + static_cast<std::size_t>(y + ky) * pw + kx;
                        const double* src = dop + static_cast<std::size_t>(y) * w;
                        int x = 0;
                        for (; x + 4 <= w; x += 4) {
                            __m256d d = _mm256_loadu_pd(dst + x);
                            d = _mm256_fmadd_pd(wvv, _mm256_loadu_pd(src + x), d);
                            _mm256_storeu_pd(dst + x, d);
                        }
                        for (; x < w; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

void v_conv3x3_bwd_weights(const double* in_pad, const double* d_out, int c, int h, int w,
                           double* d_weights, double* d_bias, int oc) {
    const int pw = w + 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pplane = static_cast<std::size_t>(h + 2) * pw;
    for (int o = 0; o < oc; ++o) {
        const double* dop = d_out + o * plane;
        if (d_bias) d_bias[o] += v_sum(plane, dop);
        for (int ic = 0; ic < c; ++ic) {
            const double* ip = in_pad + ic * pplane;
            double* dwk = d_weights + (static_cast<std::size_t>(o) * c + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    __m256d acc = _mm256_setzero_pd();
                    double tail = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const double* src = ip + static_cast<std::size_t>(y + ky) * pw + kx;
                        const double* dst = dop + static_cast<std::size_t>(y) * w;
                        int x = 0;
                        for (; x + 4 <= w; x += 4)
                            acc = _mm256_fmadd_pd(_mm256_loadu_pd(src + x), _mm256_loadu_pd(dst + x), acc);
                        for (; x < w; ++x) tail += src[x] * dst[x];
                    }
                    dwk[ky * 3 + kx] += hsum(acc) + tail;
                }
            }
        }
    }
}

} // namespace

const Ops& avx2_ops() {
    static const Ops table = {
        v_axpy, v_add, v_scal, v_lerp, v_blend, v_dot, v_sum, v_masked_sum,
        v_minmax, v_relu_fwd, v_relu_bwd, v_sgd_step,
        v_conv3x3_fwd, v_conv3x3_bwd_data, v_conv3x3_bwd_weights,
    };
    return table;
}

bool avx2_compiled() { return true; }

} // namespace seppmix::kernels

#else // !SEPPMIX_HAVE_AVX2

namespace seppmix::kernels {

const Ops& avx2_ops() { return scalar_ops(); }
bool avx2_compiled() { return false; }

} // namespace seppmix::kernels

#endif
