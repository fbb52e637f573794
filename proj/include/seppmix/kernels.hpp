#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace seppmix::kernels {

// Data-parallel inner loops used by the mixers, the conv net, and the
// reductions. Every entry has a scalar reference implementation and, on
// x86-64 with AVX2+FMA, a vectorized variant. The active table is chosen
// once at startup from cpuid, overridable via set_backend() or the
// SEPPMIX_KERNELS environment variable (scalar | avx2 | auto).
//
// Within one backend all kernels are bit-deterministic. The two backends
// agree to rounding (FMA contraction, reduction order), which the
// equivalence suite pins down.
struct Ops {
    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // y[i] += x[i]
    void (*add)(std::size_t n, const double* x, double* y);
    // x[i] *= a
    void (*scal)(std::size_t n, double a, double* x);
    // out[i] = t * a[i] + (1 - t) * b[i]
    void (*lerp)(std::size_t n, double t, const double* a, const double* b, double* out);
    // out[i] = mask[i] ? a[i] : b[i]   (exact select, no arithmetic)
    void (*blend)(std::size_t n, const std::uint8_t* mask, const double* a, const double* b, double* out);
    double (*dot)(std::size_t n, const double* x, const double* y);
    double (*sum)(std::size_t n, const double* x);
    double (*masked_sum)(std::size_t n, const std::uint8_t* mask, const double* x);
    void (*minmax)(std::size_t n, const double* x, double* mn, double* mx);
    // y[i] = max(x[i], 0)
    void (*relu_fwd)(std::size_t n, const double* x, double* y);
    // dx[i] += dy[i] * (x[i] > 0)
    void (*relu_bwd)(std::size_t n, const double* x, const double* dy, double* dx);
    // v = mom * v + g + wd * p;  p -= lr * v
    void (*sgd_step)(std::size_t n, double* p, const double* g, double* v, double lr, double mom, double wd);

    // 3x3 convolution, stride 1, on an explicitly padded input
    // (C x (H+2) x (W+2)); out is OC x H x W, w is OC x C x 3 x 3.
    void (*conv3x3_fwd)(const double* in_pad, int c, int h, int w,
                        const double* weights, const double* bias, double* out, int oc);
    // d_in_pad += full correlation of d_out with the kernels
    void (*conv3x3_bwd_data)(const double* d_out, int c, int h, int w,
                             const double* weights, double* d_in_pad, int oc);
    // d_w += in_pad (*) d_out; d_bias += row sums of d_out
    void (*conv3x3_bwd_weights)(const double* in_pad, const double* d_out, int c, int h, int w,
                                double* d_weights, double* d_bias, int oc);
};

enum class Backend { scalar, avx2 };

const Ops& scalar_ops();
bool avx2_compiled();
bool avx2_supported(); // compiled in and the CPU reports AVX2+FMA
const Ops& avx2_ops(); // valid only when avx2_compiled()

// Active table. First use resolves SEPPMIX_KERNELS; defaults to avx2 when
// supported, scalar otherwise.
const Ops& ops();
Backend active_backend();
void set_backend(Backend b);
std::string backend_name(Backend b);

} // namespace seppmix::kernels
