#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpal/cam.hpp"
#include "cpal/errors.hpp"
#include "cpal/rng.hpp"

using namespace cpal;

namespace {

Tensor random_features(Rng& rng, std::size_t h, std::size_t w, std::size_t d) {
    Tensor f = Tensor::zeros({h, w, d});
    for (double& v : f.data) v = rng.normal();
    return f;
}

Tensor random_weights(Rng& rng, std::size_t n, std::size_t d) {
    Tensor wt = Tensor::zeros({n, d});
    for (double& v : wt.data) v = rng.normal();
    return wt;
}

// plain-loop recomputation of the pooled logits
std::vector<double> logits_oracle(const Tensor& f, const Tensor& wt) {
    const std::size_t h = f.shape[0], w = f.shape[1], d = f.shape[2], n = wt.shape[0];
    std::vector<double> out(n, 0.0);
    for (std::size_t cls = 0; cls < n; ++cls) {
        double acc = 0.0;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t c = 0; c < d; ++c)
                    acc += wt.at(cls, c) * f.at(y, x, c);
        out[cls] = acc / static_cast<double>(h * w);
    }
    return out;
}

} // namespace

TEST_CASE("pooled logits match a plain-loop recomputation") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor f = random_features(rng, 3, 5, 4);
        const Tensor wt = random_weights(rng, 3, 4);
        const auto got = compute_logits(f, wt);
        const auto want = logits_oracle(f, wt);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("binary cross entropy against the scalar formula") {
    const std::vector<double> logits = {0.3, -1.2, 4.0};
    const std::vector<int> labels = {1, 0, 1};
    double want = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-logits[i]));
        want += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    want /= static_cast<double>(logits.size());
    CHECK(bce_loss(logits, labels) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("binary cross entropy is finite for extreme logits") {
    const double v = bce_loss({1e8, -1e8}, {0, 1});
    CHECK(std::isfinite(v));
    // both logits clamp to magnitude 30 and are maximally wrong
    CHECK(v == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(bce_loss({1e8, -1e8}, {1, 0}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("binary cross entropy input validation") {
    CHECK_THROWS_AS(bce_loss({0.1}, {1, 0}), DimensionError);
    CHECK_THROWS_AS(bce_loss({}, {}), DimensionError);
}

TEST_CASE("activation maps via hand computation") {
    // 2x2x2 features, two classes, only class 1 present
    Tensor f({2, 2, 2}, {1, 0, 0, 1, 2, 0, -1, -1});
    Tensor wt({2, 2}, {1, 0, 0, 1});
    const std::vector<int> labels = {0, 1};

    std::vector<int> present;
    const auto maps = compute_cam(f, wt, labels, &present);
    REQUIRE(maps.size() == 1);
    REQUIRE(present == std::vector<int>{1});

    // responses for class 1 are the second feature channel: 0, 1, 0, -1
    // ReLU then divide by the maximum (1)
    CHECK(maps[0].data == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("a never-firing class yields an all-zero map") {
    Tensor f({1, 2, 1}, {-3, -4});
    Tensor wt({1, 1}, {1});
    const auto maps = compute_cam(f, wt, {1});
    REQUIRE(maps.size() == 1);
    CHECK(maps[0].data == std::vector<double>{0, 0});
}

TEST_CASE("no present class is degenerate") {
    Tensor f({1, 1, 1}, {1});
    Tensor wt({2, 1}, {1, 1});
    CHECK_THROWS_AS(compute_cam(f, wt, {0, 0}), DegenerateInputError);
}

TEST_CASE("normalized maps are scale invariant in the classifier weights") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor f = random_features(rng, 4, 4, 6);
        const Tensor wt = random_weights(rng, 3, 6);
        Tensor scaled = wt;
        const double c = std::exp(rng.uniform(-3.0, 3.0));
        for (double& v : scaled.data) v *= c;
        const auto a = compute_cam(f, wt, {1, 1, 1});
        const auto b = compute_cam(f, scaled, {1, 1, 1});
        REQUIRE(a.size() == b.size());
        for (std::size_t m = 0; m < a.size(); ++m)
            for (std::size_t i = 0; i < a[m].size(); ++i)
                CHECK(std::abs(a[m].data[i] - b[m].data[i]) <= 1e-12);
    }
}

TEST_CASE("background map complements the foreground maximum") {
    Tensor a({1, 2}, {0.2, 0.9});
    Tensor b({1, 2}, {0.5, 0.1});
    const Tensor bg = background_map({a, b});
    CHECK(bg.data[0] == doctest::Approx(0.5));
    CHECK(bg.data[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("activation set lists present classes then the background sentinel") {
    Rng rng(5);
    const Tensor f = random_features(rng, 3, 3, 4);
    const Tensor wt = random_weights(rng, 4, 4);
    const ActivationSet act = build_activation_set(f, wt, {0, 1, 0, 1});
    REQUIRE(act.foreground.size() == 2);
    CHECK(act.class_order == std::vector<int>{1, 3, 4});
    CHECK(act.background.same_shape(act.foreground[0]));
    for (std::size_t i = 0; i < act.background.size(); ++i) {
        const double m = std::max(act.foreground[0].data[i], act.foreground[1].data[i]);
        CHECK(act.background.data[i] == doctest::Approx(1.0 - m).epsilon(1e-12));
    }
}

TEST_CASE("shape validation") {
    Tensor f({2, 2, 3}, std::vector<double>(12, 1.0));
    Tensor wt({1, 4}, {1, 1, 1, 1});
    CHECK_THROWS_AS(compute_logits(f, wt), DimensionError);
    CHECK_THROWS_AS(compute_cam(f, wt, {1}), DimensionError);
    Tensor nw({2, 3}, std::vector<double>(6, 1.0));
    CHECK_THROWS_AS(compute_cam(f, nw, {1}), DimensionError); // labels shorter than N
}
