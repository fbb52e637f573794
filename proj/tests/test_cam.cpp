#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "testutil.hpp"

#include "seppmix/cam.hpp"
#include "seppmix/interp.hpp"

using namespace seppmix;
using namespace testutil;

namespace {

ClassifierWeights make_weights(int num_classes, int channels, const std::vector<double>& rows) {
    ClassifierWeights w;
    w.num_classes = num_classes;
    w.channels = channels;
    w.data = rows;
    return w;
}

} // namespace

TEST_CASE("compute_cam constants and linearity") {
    FeatureStack ones(1, 3, 3);
    for (auto& v : ones.data) v = 1.0;
    const auto w1 = make_weights(1, 1, {1.0});
    const auto cam1 = cam::compute_cam(ones, w1, 0, 6, 6);
    for (double v : cam1.data) CHECK(v == 1.0); // constant survives upsampling exactly

    const auto w0 = make_weights(1, 1, {0.0});
    const auto cam0 = cam::compute_cam(ones, w0, 0, 6, 6);
    for (double v : cam0.data) CHECK(v == 0.0);

    // linearity in the weights
    SeededRng rng(2);
    FeatureStack fs(3, 2, 2);
    for (auto& v : fs.data) v = rng.uniform01() * 2.0 - 1.0;
    std::vector<double> ra(3), rb(3), rsum(3);
    for (int i = 0; i < 3; ++i) {
        ra[static_cast<std::size_t>(i)] = rng.uniform01();
        rb[static_cast<std::size_t>(i)] = rng.uniform01();
        rsum[static_cast<std::size_t>(i)] = ra[static_cast<std::size_t>(i)] + rb[static_cast<std::size_t>(i)];
    }
    const auto ca = cam::compute_cam(fs, make_weights(1, 3, ra), 0, 5, 5);
    const auto cb = cam::compute_cam(fs, make_weights(1, 3, rb), 0, 5, 5);
    const auto cs = cam::compute_cam(fs, make_weights(1, 3, rsum), 0, 5, 5);
    for (std::size_t i = 0; i < cs.data.size(); ++i)
        CHECK(cs.data[i] == doctest::Approx(ca.data[i] + cb.data[i]).epsilon(1e-6));
}

TEST_CASE("compute_cam against independent interpolation oracle") {
    FeatureStack fs(2, 2, 2);
    const double m1[4] = {1, 2, 3, 4};
    const double m2[4] = {4, 3, 2, 1};
    for (int i = 0; i < 4; ++i) {
        fs.map(0)[i] = m1[i];
        fs.map(1)[i] = m2[i];
    }
    const auto w = make_weights(1, 2, {0.5, -0.5});
    const auto got = cam::compute_cam(fs, w, 0, 4, 4);

    Map2D raw(2, 2);
    for (int i = 0; i < 4; ++i) raw.data[static_cast<std::size_t>(i)] = 0.5 * m1[i] - 0.5 * m2[i];
    const auto want = oracles::naive_bilinear(raw, 4, 4);
    for (std::size_t i = 0; i < want.data.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));

    CHECK_THROWS_AS(cam::compute_cam(fs, make_weights(1, 3, {1, 2, 3}), 0, 4, 4), InputDomainError);
    CHECK_THROWS_AS(cam::compute_cam(fs, w, 1, 4, 4), InputDomainError);
    CHECK_THROWS_AS(cam::compute_cam(fs, w, 0, 1, 4), InputDomainError);
}

TEST_CASE("bilinear resize oracle agreement on random maps") {
    SeededRng rng(8);
    for (int iter = 0; iter < 50; ++iter) {
        const int h = 1 + static_cast<int>(rng.uniform_int(5));
        const int w = 1 + static_cast<int>(rng.uniform_int(5));
        const int oh = h + static_cast<int>(rng.uniform_int(7));
        const int ow = w + static_cast<int>(rng.uniform_int(7));
        Map2D in(h, w);
        for (auto& v : in.data) v = rng.uniform01() * 4.0 - 2.0;
        const auto got = bilinear_resize(in, oh, ow);
        const auto want = oracles::naive_bilinear(in, oh, ow);
        for (std::size_t i = 0; i < want.data.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("normalize_to_semantic_map") {
    Map2D flat(4, 4);
    for (auto& v : flat.data) v = 2.5;
    const auto s = cam::normalize_to_semantic_map(flat);
    for (double v : s.data) CHECK(v == doctest::Approx(1.0 / 16.0).epsilon(1e-15));

    const auto u = cam::normalize_to_semantic_map(Map2D(4, 4)); // all zero -> uniform
    for (double v : u.data) CHECK(v == 1.0 / 16.0);

    Map2D m(2, 2);
    m.at(0, 0) = -1;
    m.at(0, 1) = 0;
    m.at(1, 0) = 1;
    m.at(1, 1) = 2;
    const auto n = cam::normalize_to_semantic_map(m);
    CHECK(n.at(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(n.at(0, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(n.at(1, 0) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(n.at(1, 1) == doctest::Approx(3.0 / 6.0).epsilon(1e-12));

    Map2D bad(2, 2);
    bad.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(cam::normalize_to_semantic_map(bad), InputDomainError);
}

TEST_CASE("normalize validity under adversarial inputs") {
    SeededRng rng(13);
    for (int iter = 0; iter < 2000; ++iter) {
        const int h = 1 + static_cast<int>(rng.uniform_int(6));
        const int w = 1 + static_cast<int>(rng.uniform_int(6));
        Map2D raw(h, w);
        const int mode = static_cast<int>(rng.uniform_int(4));
        for (auto& v : raw.data) {
            switch (mode) {
                case 0: v = rng.uniform01() * 10.0 - 5.0; break; // mixed signs
                case 1: v = -rng.uniform01() * 3.0 - 0.1; break; // all negative
                case 2: v = 0.0; break;                          // all zero
                default: v = -4.2; break;                        // negative constant
            }
        }
        const auto s = cam::normalize_to_semantic_map(raw);
        double total = 0.0;
        for (double v : s.data) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("semantic_proportion") {
    const auto s = uniform_map(4, 4);
    PixelMask ones(4, 4);
    for (auto& v : ones.data) v = 1;
    CHECK(cam::semantic_proportion(ones, s) == 1.0);
    CHECK(cam::semantic_proportion(PixelMask(4, 4), s) == 0.0);

    // uniform map, m of N^2 equal patches
    PixelMask half(4, 4);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 4; ++x) half.at(y, x) = 1;
    CHECK(cam::semantic_proportion(half, s) == doctest::Approx(0.5).epsilon(1e-12));

    PixelMask wrong(3, 4);
    CHECK_THROWS_AS(cam::semantic_proportion(wrong, s), InputDomainError);

    // complement property on random maps
    SeededRng rng(19);
    for (int iter = 0; iter < 200; ++iter) {
        const int h = 2 + static_cast<int>(rng.uniform_int(6));
        const int w = 2 + static_cast<int>(rng.uniform_int(6));
        const auto sm = random_semantic_map(h, w, rng);
        PixelMask m(h, w);
        for (auto& v : m.data) v = rng.bernoulli(0.5) ? 1 : 0;
        const double lhs = cam::semantic_proportion(m, sm) + cam::semantic_proportion(complement(m), sm);
        CHECK(lhs == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(cam::semantic_proportion(m, sm) ==
              doctest::Approx(oracles::naive_masked_sum(m, sm)).epsilon(1e-12));
    }
}
