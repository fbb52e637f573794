#include "seppmix/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "seppmix/kernels.hpp"
#include "seppmix/random.hpp"

namespace seppmix::nnet {
namespace {

// Zero-pads a CxHxW tensor into Cx(H+2)x(W+2).
void pad1(const double* in, int c, int h, int w, std::vector<double>& out) {
    const int ph = h + 2, pw = w + 2;
    out.assign(static_cast<std::size_t>(c) * ph * pw, 0.0);
    for (int ic = 0; ic < c; ++ic) {
        const double* src = in + static_cast<std::size_t>(ic) * h * w;
        double* dst = out.data() + static_cast<std::size_t>(ic) * ph * pw;
        for (int y = 0; y < h; ++y)
            std::memcpy(dst + static_cast<std::size_t>(y + 1) * pw + 1,
                        src + static_cast<std::size_t>(y) * w, sizeof(double) * static_cast<std::size_t>(w));
    }
}

} // namespace

std::size_t Model::add_view(const std::string& name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    const std::size_t off = theta_.size();
    theta_.resize(off + n, 0.0);
    views_.push_back({name, off, n, std::move(shape)});
    return off;
}

Model::Model(BackboneConfig cfg, int num_classes) : cfg_(std::move(cfg)), num_classes_(num_classes) {
    if (cfg_.channels.empty()) throw InputDomainError("Model: at least one conv block required");
    if (num_classes_ < 2) throw InputDomainError("Model: need at least two classes");
    int in_c = 3;
    for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
        const int out_c = cfg_.channels[i];
        const std::string tag = "block" + std::to_string(i);
        ConvOff co;
        co.in_c = in_c;
        co.out_c = out_c;
        co.w = add_view(tag + ".conv.weight", {out_c, in_c, 3, 3});
        co.b = add_view(tag + ".conv.bias", {out_c});
        conv_.push_back(co);
        NormOff no;
        no.c = out_c;
        no.g = add_view(tag + ".norm.gamma", {out_c});
        no.b = add_view(tag + ".norm.beta", {out_c});
        norm_.push_back(no);
        in_c = out_c;
    }
    cls_.in = in_c;
    cls_.out = num_classes_;
    cls_.w = add_view("cls.weight", {num_classes_, in_c});
    cls_.b = add_view("cls.bias", {num_classes_});
    rot_.in = in_c;
    rot_.out = 4;
    rot_.w = add_view("rot.weight", {4, in_c});
    rot_.b = add_view("rot.bias", {4});
}

void Model::init_params(std::uint64_t seed) {
    SeededRng rng(seed);
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        const auto& co = conv_[i];
        const double std = std::sqrt(2.0 / (static_cast<double>(co.in_c) * 9.0));
        double* w = theta_.data() + co.w;
        const std::size_t n = static_cast<std::size_t>(co.out_c) * co.in_c * 9;
        for (std::size_t k = 0; k < n; ++k) w[k] = rng.normal() * std;
        std::fill_n(theta_.data() + co.b, co.out_c, 0.0);
        std::fill_n(theta_.data() + norm_[i].g, norm_[i].c, 1.0);
        std::fill_n(theta_.data() + norm_[i].b, norm_[i].c, 0.0);
    }
    for (const LinOff* lin : {&cls_, &rot_}) {
        const double std = 1.0 / std::sqrt(static_cast<double>(lin->in));
        double* w = theta_.data() + lin->w;
        const std::size_t n = static_cast<std::size_t>(lin->out) * lin->in;
        for (std::size_t k = 0; k < n; ++k) w[k] = rng.normal() * std;
        std::fill_n(theta_.data() + lin->b, lin->out, 0.0);
    }
}

std::span<double> Model::param(const std::string& name) {
    for (const auto& v : views_)
        if (v.name == name) return {theta_.data() + v.offset, v.size};
    throw InputDomainError("Model: unknown parameter '" + name + "'");
}

std::span<const double> Model::param(const std::string& name) const {
    for (const auto& v : views_)
        if (v.name == name) return {theta_.data() + v.offset, v.size};
    throw InputDomainError("Model: unknown parameter '" + name + "'");
}

std::pair<std::size_t, std::size_t> Model::cls_range() const {
    return {cls_.w, static_cast<std::size_t>(cls_.out) * cls_.in + static_cast<std::size_t>(cls_.out)};
}

void Model::forward(const Image& img, Cache& cache) const {
    const auto& k = kernels::ops();
    cache.blocks.resize(conv_.size());
    int h = img.height, w = img.width;
    const double* in = img.data.data();
    int in_c = 3;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        auto& bc = cache.blocks[i];
        const auto& co = conv_[i];
        const auto& no = norm_[i];
        if (h < 2 || w < 2)
            throw InputDomainError("Model: image too small for backbone depth");
        bc.h = h;
        bc.w = w;
        pad1(in, in_c, h, w, bc.in_pad);
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        bc.conv_out.resize(static_cast<std::size_t>(co.out_c) * plane);
        k.conv3x3_fwd(bc.in_pad.data(), in_c, h, w, theta_.data() + co.w, theta_.data() + co.b,
                      bc.conv_out.data(), co.out_c);

        // Instance norm over each channel's spatial extent, affine.
        bc.mu.resize(static_cast<std::size_t>(co.out_c));
        bc.invstd.resize(static_cast<std::size_t>(co.out_c));
        bc.norm_out.resize(bc.conv_out.size());
        const double inv_n = 1.0 / static_cast<double>(plane);
        for (int oc = 0; oc < co.out_c; ++oc) {
            const double* x = bc.conv_out.data() + static_cast<std::size_t>(oc) * plane;
            const double mu = k.sum(plane, x) * inv_n;
            double var = 0.0;
            for (std::size_t p = 0; p < plane; ++p) {
                const double d = x[p] - mu;
                var += d * d;
            }
            var *= inv_n;
            const double invstd = 1.0 / std::sqrt(var + cfg_.norm_eps);
            bc.mu[static_cast<std::size_t>(oc)] = mu;
            bc.invstd[static_cast<std::size_t>(oc)] = invstd;
            const double g = theta_[no.g + static_cast<std::size_t>(oc)];
            const double b = theta_[no.b + static_cast<std::size_t>(oc)];
            double* y = bc.norm_out.data() + static_cast<std::size_t>(oc) * plane;
            const double scale = g * invstd;
            const double shift = b - mu * scale;
            for (std::size_t p = 0; p < plane; ++p) y[p] = scale * x[p] + shift;
        }

        bc.act.resize(bc.norm_out.size());
        k.relu_fwd(bc.norm_out.size(), bc.norm_out.data(), bc.act.data());

        // 2x2 maxpool, stride 2, trailing odd row/column dropped. Ties break
        // toward the first element in scan order.
        const int oh = h / 2, ow = w / 2;
        bc.oh = oh;
        bc.ow = ow;
        const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
        bc.pooled.resize(static_cast<std::size_t>(co.out_c) * oplane);
        bc.argmax.resize(bc.pooled.size());
        for (int oc = 0; oc < co.out_c; ++oc) {
            const double* a = bc.act.data() + static_cast<std::size_t>(oc) * plane;
            double* p = bc.pooled.data() + static_cast<std::size_t>(oc) * oplane;
            int* am = bc.argmax.data() + static_cast<std::size_t>(oc) * oplane;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    int best = (2 * y) * w + 2 * x;
                    double bv = a[best];
                    const int cand[3] = {(2 * y) * w + 2 * x + 1, (2 * y + 1) * w + 2 * x,
                                         (2 * y + 1) * w + 2 * x + 1};
                    for (int ci : cand) {
                        if (a[ci] > bv) {
                            bv = a[ci];
                            best = ci;
                        }
                    }
                    p[static_cast<std::size_t>(y) * ow + x] = bv;
                    am[static_cast<std::size_t>(y) * ow + x] = best;
                }
            }
        }
        in = bc.pooled.data();
        in_c = co.out_c;
        h = oh;
        w = ow;
    }

    cache.feat_h = h;
    cache.feat_w = w;
    const std::size_t fplane = static_cast<std::size_t>(h) * w;
    const int c = cfg_.channels.back();
    cache.embedding.resize(static_cast<std::size_t>(c));
    const double inv = 1.0 / static_cast<double>(fplane);
    const double* feat = cache.blocks.back().pooled.data();
    for (int l = 0; l < c; ++l)
        cache.embedding[static_cast<std::size_t>(l)] = k.sum(fplane, feat + static_cast<std::size_t>(l) * fplane) * inv;
}

void Model::backward(const Cache& cache, const double* d_embedding, double* grad) const {
    const auto& k = kernels::ops();
    const int c_last = cfg_.channels.back();
    const std::size_t fplane = static_cast<std::size_t>(cache.feat_h) * cache.feat_w;

    // GAP backward.
    std::vector<double> d_pooled(static_cast<std::size_t>(c_last) * fplane);
    const double inv = 1.0 / static_cast<double>(fplane);
    for (int l = 0; l < c_last; ++l)
        std::fill_n(d_pooled.data() + static_cast<std::size_t>(l) * fplane, fplane,
                    d_embedding[l] * inv);

    std::vector<double> d_act, d_norm, d_conv, d_in_pad;
    for (std::size_t bi = conv_.size(); bi-- > 0;) {
        const auto& bc = cache.blocks[bi];
        const auto& co = conv_[bi];
        const auto& no = norm_[bi];
        const std::size_t plane = static_cast<std::size_t>(bc.h) * bc.w;
        const std::size_t oplane = static_cast<std::size_t>(bc.oh) * bc.ow;

        // Unpool through the cached argmax.
        d_act.assign(static_cast<std::size_t>(co.out_c) * plane, 0.0);
        for (int oc = 0; oc < co.out_c; ++oc) {
            const int* am = bc.argmax.data() + static_cast<std::size_t>(oc) * oplane;
            const double* dp = d_pooled.data() + static_cast<std::size_t>(oc) * oplane;
            double* da = d_act.data() + static_cast<std::size_t>(oc) * plane;
            for (std::size_t p = 0; p < oplane; ++p) da[static_cast<std::size_t>(am[p])] += dp[p];
        }

        d_norm.assign(d_act.size(), 0.0);
        k.relu_bwd(d_act.size(), bc.norm_out.data(), d_act.data(), d_norm.data());

        // Instance norm backward.
        d_conv.resize(d_norm.size());
        const double inv_n = 1.0 / static_cast<double>(plane);
        for (int oc = 0; oc < co.out_c; ++oc) {
            const double* x = bc.conv_out.data() + static_cast<std::size_t>(oc) * plane;
            const double* dy = d_norm.data() + static_cast<std::size_t>(oc) * plane;
            double* dx = d_conv.data() + static_cast<std::size_t>(oc) * plane;
            const double mu = bc.mu[static_cast<std::size_t>(oc)];
            const double invstd = bc.invstd[static_cast<std::size_t>(oc)];
            const double g = theta_[no.g + static_cast<std::size_t>(oc)];
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t p = 0; p < plane; ++p) {
                const double xhat = (x[p] - mu) * invstd;
                sum_dy += dy[p];
                sum_dy_xhat += dy[p] * xhat;
            }
            grad[no.b + static_cast<std::size_t>(oc)] += sum_dy;
            grad[no.g + static_cast<std::size_t>(oc)] += sum_dy_xhat;
            const double m_dy = sum_dy * inv_n;
            const double m_dy_xhat = sum_dy_xhat * inv_n;
            const double s = g * invstd;
            for (std::size_t p = 0; p < plane; ++p) {
                const double xhat = (x[p] - mu) * invstd;
                dx[p] = s * (dy[p] - m_dy - xhat * m_dy_xhat);
            }
        }

        k.conv3x3_bwd_weights(bc.in_pad.data(), d_conv.data(), co.in_c, bc.h, bc.w,
                              grad + co.w, grad + co.b, co.out_c);
        if (bi == 0) break; // input image grads unused
        d_in_pad.assign(static_cast<std::size_t>(co.in_c) * (bc.h + 2) * (bc.w + 2), 0.0);
        k.conv3x3_bwd_data(d_conv.data(), co.in_c, bc.h, bc.w, theta_.data() + co.w,
                           d_in_pad.data(), co.out_c);
        // Strip padding into the previous block's pooled-gradient buffer.
        d_pooled.resize(static_cast<std::size_t>(co.in_c) * plane);
        const int pw = bc.w + 2;
        for (int ic = 0; ic < co.in_c; ++ic) {
            const double* src = d_in_pad.data() + static_cast<std::size_t>(ic) * (bc.h + 2) * pw;
            double* dst = d_pooled.data() + static_cast<std::size_t>(ic) * plane;
            for (int y = 0; y < bc.h; ++y)
                std::memcpy(dst + static_cast<std::size_t>(y) * bc.w,
                            src + static_cast<std::size_t>(y + 1) * pw + 1,
                            sizeof(double) * static_cast<std::size_t>(bc.w));
        }
    }
}

void Model::linear_forward(const LinOff& lin, const double* in, double* out) const {
    const auto& k = kernels::ops();
    for (int o = 0; o < lin.out; ++o)
        out[o] = theta_[lin.b + static_cast<std::size_t>(o)] +
                 k.dot(static_cast<std::size_t>(lin.in),
                       theta_.data() + lin.w + static_cast<std::size_t>(o) * lin.in, in);
}

void Model::linear_backward(const LinOff& lin, const double* in, const double* d_out,
                            double* grad, double* d_in) const {
    const auto& k = kernels::ops();
    for (int o = 0; o < lin.out; ++o) {
        const double g = d_out[o];
        grad[lin.b + static_cast<std::size_t>(o)] += g;
        k.axpy(static_cast<std::size_t>(lin.in), g, in,
               grad + lin.w + static_cast<std::size_t>(o) * lin.in);
        if (d_in)
            k.axpy(static_cast<std::size_t>(lin.in), g,
                   theta_.data() + lin.w + static_cast<std::size_t>(o) * lin.in, d_in);
    }
}

void Model::cls_logits(const double* emb, double* out) const { linear_forward(cls_, emb, out); }
void Model::rot_logits(const double* emb, double* out) const { linear_forward(rot_, emb, out); }

void Model::cls_backward(const double* emb, const double* d_logits, double* grad, double* d_emb) const {
    linear_backward(cls_, emb, d_logits, grad, d_emb);
}

void Model::rot_backward(const double* emb, const double* d_logits, double* grad, double* d_emb) const {
    linear_backward(rot_, emb, d_logits, grad, d_emb);
}

Model::Features Model::forward_features(const Image& img) const {
    Cache cache;
    forward(img, cache);
    Features f;
    f.maps = FeatureStack(cfg_.channels.back(), cache.feat_h, cache.feat_w);
    f.maps.data = cache.blocks.back().pooled;
    f.embedding = cache.embedding;
    return f;
}

std::vector<double> Model::embed(const Image& img) const {
    Cache cache;
    forward(img, cache);
    return cache.embedding;
}

ClassifierWeights Model::classifier_weights() const {
    ClassifierWeights w;
    w.num_classes = cls_.out;
    w.channels = cls_.in;
    w.data.assign(theta_.begin() + static_cast<std::ptrdiff_t>(cls_.w),
                  theta_.begin() + static_cast<std::ptrdiff_t>(cls_.w) +
                      static_cast<std::ptrdiff_t>(cls_.out) * cls_.in);
    return w;
}

int argmax(std::span<const double> v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
}

} // namespace seppmix::nnet
