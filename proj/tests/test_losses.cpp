#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "testutil.hpp"

#include "seppmix/losses.hpp"
#include "seppmix/mixkit.hpp"

using namespace seppmix;
using namespace testutil;

TEST_CASE("soft_cross_entropy closed forms") {
    // uniform logits: loss = mass * ln C
    const std::vector<double> z(5, 0.0);
    LabelDistribution t(5);
    t.weights[2] = 1.0;
    CHECK(nnet::soft_cross_entropy(z, t) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    t.weights[2] = 0.3;
    t.weights[4] = 0.45;
    CHECK(nnet::soft_cross_entropy(z, t) == doctest::Approx(0.75 * std::log(5.0)).epsilon(1e-12));

    // saturated correct class
    std::vector<double> strong(4, 0.0);
    strong[1] = 50.0;
    LabelDistribution hot(4);
    hot.weights[1] = 1.0;
    CHECK(nnet::soft_cross_entropy(strong, hot) < 1e-6);

    // 3-class example against the log-sum-exp oracle
    const std::vector<double> logits{1.0, 0.5, -0.5};
    LabelDistribution mixed(3);
    mixed.weights[0] = 0.75;
    mixed.weights[1] = 0.25;
    CHECK(nnet::soft_cross_entropy(logits, mixed) ==
          doctest::Approx(oracles::naive_soft_ce(logits, mixed)).epsilon(1e-9));

    std::vector<double> bad{1.0, std::numeric_limits<double>::infinity()};
    LabelDistribution t2(2);
    t2.weights[0] = 1.0;
    CHECK_THROWS_AS(nnet::soft_cross_entropy(bad, t2), NumericalError);
}

TEST_CASE("soft-target linearity") {
    SeededRng rng(6);
    for (int iter = 0; iter < 200; ++iter) {
        const int c = 2 + static_cast<int>(rng.uniform_int(9));
        std::vector<double> z(static_cast<std::size_t>(c));
        for (auto& v : z) v = rng.uniform01() * 8.0 - 4.0;
        const int ka = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
        const int kb = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
        const double rho_a = rng.uniform01();
        const double rho_b = rng.uniform01();
        const auto ya = mixkit::one_hot(ka, c);
        const auto yb = mixkit::one_hot(kb, c);
        const auto combined = mixkit::combine_labels(ya, yb, rho_a, rho_b);
        const double lhs = nnet::soft_cross_entropy(z, combined);
        const double rhs =
            rho_a * nnet::soft_cross_entropy(z, ya) + rho_b * nnet::soft_cross_entropy(z, yb);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("soft_cross_entropy_grad matches finite differences") {
    SeededRng rng(7);
    std::vector<double> z{0.3, -1.2, 0.8, 2.0};
    LabelDistribution t(4);
    t.weights[0] = 0.6;
    t.weights[3] = 0.25;
    std::vector<double> grad(4, 0.0);
    nnet::soft_cross_entropy_grad(z, t, 1.0, grad.data());
    for (int i = 0; i < 4; ++i) {
        const double h = 1e-6;
        auto zp = z, zm = z;
        zp[static_cast<std::size_t>(i)] += h;
        zm[static_cast<std::size_t>(i)] -= h;
        const double fd =
            (nnet::soft_cross_entropy(zp, t) - nnet::soft_cross_entropy(zm, t)) / (2.0 * h);
        CHECK(grad[static_cast<std::size_t>(i)] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("total_loss") {
    CHECK(nnet::total_loss(2.0, 1.0, {1.0, 0.5}) == 2.5);
    SeededRng rng(8);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform01() * 10.0, y = rng.uniform01() * 10.0;
        CHECK(nnet::total_loss(x, y, {1.0, 0.0}) == x); // beta=0 ablates rotation
    }
    CHECK(nnet::total_loss(0.0, 0.0, {3.0, 7.0}) == 0.0);
    CHECK_THROWS_AS(nnet::total_loss(std::numeric_limits<double>::quiet_NaN(), 0.0, {1, 1}),
                    NumericalError);
}

TEST_CASE("mixed_classification_loss closed forms") {
    nnet::BackboneConfig bc;
    bc.channels = {4};
    nnet::Model model(bc, 3);
    model.init_params(11);
    // zero classification head -> uniform logits
    auto wspan = model.param("cls.weight");
    std::fill(wspan.begin(), wspan.end(), 0.0);
    auto bspan = model.param("cls.bias");
    std::fill(bspan.begin(), bspan.end(), 0.0);

    SeededRng rng(12);
    std::vector<MixedSample> batch(1);
    batch[0].image = random_image(8, 8, rng);
    batch[0].label = mixkit::one_hot(1, 3);
    const double lm = nnet::mixed_classification_loss(model, batch);
    CHECK(lm == doctest::Approx(4.0 * std::log(3.0)).epsilon(1e-9)); // sum over 4 rotations

    const double lm_mean = nnet::mixed_classification_loss(model, batch, nnet::LmReduction::mean);
    CHECK(lm_mean == doctest::Approx(std::log(3.0)).epsilon(1e-9));

    // duplicated image: same loss as a single-image batch
    nnet::Model m2(bc, 3);
    m2.init_params(13);
    std::vector<MixedSample> dup(2);
    dup[0] = batch[0];
    dup[1] = batch[0];
    CHECK(nnet::mixed_classification_loss(m2, dup) ==
          doctest::Approx(nnet::mixed_classification_loss(m2, {dup.data(), 1})).epsilon(1e-12));

    CHECK_THROWS_AS(nnet::mixed_classification_loss(model, {}), InputDomainError);
}

TEST_CASE("rotation_loss closed forms") {
    nnet::BackboneConfig bc;
    bc.channels = {4};
    nnet::Model model(bc, 3);
    model.init_params(14);
    auto wspan = model.param("rot.weight");
    std::fill(wspan.begin(), wspan.end(), 0.0);
    auto bspan = model.param("rot.bias");
    std::fill(bspan.begin(), bspan.end(), 0.0);

    SeededRng rng(15);
    std::vector<MixedSample> batch(2);
    for (auto& s : batch) {
        s.image = random_image(8, 8, rng);
        s.label = mixkit::one_hot(0, 3);
    }
    CHECK(nnet::rotation_loss(model, batch) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK_THROWS_AS(nnet::rotation_loss(model, {}), InputDomainError);
}

TEST_CASE("batch losses agree with the from-scratch scalar oracle") {
    nnet::BackboneConfig bc;
    bc.channels = {3, 5};
    nnet::Model model(bc, 2);
    model.init_params(21);

    SeededRng rng(22);
    std::vector<MixedSample> batch(2);
    for (int i = 0; i < 2; ++i) {
        const Image xa = random_image(8, 8, rng);
        const Image xb = random_image(8, 8, rng);
        batch[static_cast<std::size_t>(i)] =
            mixkit::mixup(xa, 0, xb, 1, 2, 0.25 + 0.5 * rng.uniform01());
    }

    double want_lm = 0.0, want_lr = 0.0;
    for (const auto& s : batch) {
        for (int r = 0; r < 4; ++r) {
            const Image img = rotation::rotate(s.image, static_cast<rotation::RotationAngle>(r));
            const auto emb = oracles::naive_embedding(model, img);
            want_lm += oracles::naive_soft_ce(oracles::naive_linear(model, "cls", emb), s.label);
            LabelDistribution t(4);
            t.weights[static_cast<std::size_t>(r)] = 1.0;
            want_lr += 0.25 * oracles::naive_soft_ce(oracles::naive_linear(model, "rot", emb), t);
        }
    }
    want_lm /= 2.0;
    want_lr /= 2.0;

    CHECK(nnet::mixed_classification_loss(model, batch) == doctest::Approx(want_lm).epsilon(1e-6));
    CHECK(nnet::rotation_loss(model, batch) == doctest::Approx(want_lr).epsilon(1e-6));
}
