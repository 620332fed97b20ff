#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "feddlora/lora.hpp"
#include "feddlora/rng.hpp"

using namespace feddlora;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(int h, int w, Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    MatrixXd m(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) m(i, j) = d(rng);
    return m;
}

LoraLayer random_layer(int h, int w, int rank, Rng& rng) {
    LoraLayer layer;
    layer.w0 = random_matrix(h, w, rng);
    layer.b = random_matrix(h, rank, rng);
    layer.a = random_matrix(rank, w, rng);
    layer.rank = rank;
    return layer;
}

// Quadratic loss 0.5*||W_eff X - Y||_F^2 evaluated through the forward path;
// its gradient w.r.t. the effective weight is (W_eff X - Y) X^T.
double quad_loss(const LoraLayer& layer, const MatrixXd& x, const MatrixXd& y) {
    MatrixXd out = layer.w0 * x + layer.b * (layer.a * x);
    return 0.5 * (out - y).squaredNorm();
}

const ModelSpec kTwoLayer{{{64, 32}, {32, 10}}};

}  // namespace

TEST_CASE("zero B factor leaves the effective weight at the base") {
    ModelSpec spec{{{4, 4}}};
    auto layers = new_lora_model(spec, 1, 7);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].b.isZero(0.0));
    CHECK(layers[0].effective_weight() == layers[0].w0);
    VectorXd x = VectorXd::LinSpaced(4, -1.0, 2.0);
    CHECK(lora_forward(layers[0], x) == layers[0].w0 * x);
}

TEST_CASE("parameter counts follow r(h+w)") {
    ModelSpec single{{{64, 32}}};
    auto c = param_counts(single, 4);
    CHECK(c.full == 2048);
    CHECK(c.lora == 384);

    CHECK(kTwoLayer.full_params() == 2368);
    CHECK(kTwoLayer.lora_params_per_rank() == 138);
    CHECK(param_counts(kTwoLayer, 2).lora == 276);
    CHECK(param_counts(kTwoLayer, 32).lora == 4416);

    CHECK_THROWS_AS(param_counts(kTwoLayer, 0), InvalidRankError);
}

TEST_CASE("rank upper bound") {
    // min(cap, floor(N / per-rank), min layer dim) = min(32, 2368/138=17, 10)
    CHECK(rank_upper_bound(kTwoLayer, 32) == 10);
    CHECK(rank_upper_bound(kTwoLayer, 1) == 1);

    ModelSpec square{{{8, 8}}};
    CHECK(rank_upper_bound(square, 100) == 4);  // floor(64/16)

    ModelSpec degenerate{{{1, 1}}};  // floor(1/2) = 0
    CHECK_THROWS_AS(rank_upper_bound(degenerate, 4), DegenerateSpecError);
}

TEST_CASE("lora model smaller than full exactly below the size bound") {
    const long long n = kTwoLayer.full_params();
    const long long per = kTwoLayer.lora_params_per_rank();
    for (int r = 1; r <= 10; ++r) {
        auto c = param_counts(kTwoLayer, r);
        CHECK((c.lora < c.full) == (static_cast<long long>(r) * per < n));
    }
}

TEST_CASE("construction rejects out-of-range ranks, naming the layer") {
    try {
        new_lora_model(kTwoLayer, 11, 1);  // layer 1 has min(32,10) = 10
        FAIL("expected InvalidRankError");
    } catch (const InvalidRankError& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
    CHECK_THROWS_AS(new_lora_model(kTwoLayer, 0, 1), InvalidRankError);
}

TEST_CASE("forward is the low-rank sum of two thin products") {
    Rng rng(11);

    SUBCASE("rank-1 unit construction") {
        LoraLayer layer;
        layer.w0 = MatrixXd::Zero(3, 3);
        layer.b = MatrixXd::Zero(3, 1);
        layer.b(0, 0) = 1.0;
        layer.a = MatrixXd::Zero(1, 3);
        layer.a(0, 0) = 1.0;
        layer.rank = 1;
        VectorXd e1 = VectorXd::Unit(3, 0);
        CHECK(lora_forward(layer, e1) == e1);
    }

    SUBCASE("matches the materialized dense product") {
        for (int trial = 0; trial < 50; ++trial) {
            const int h = 2 + static_cast<int>(rng() % 12);
            const int w = 2 + static_cast<int>(rng() % 12);
            const int r = 1 + static_cast<int>(rng() % std::min(h, w));
            auto layer = random_layer(h, w, r, rng);
            VectorXd x = random_matrix(w, 1, rng);
            VectorXd dense = (layer.w0 + layer.b * layer.a) * x;
            CHECK((lora_forward(layer, x) - dense).norm() <= 1e-10 * x.norm());
        }
    }

    SUBCASE("dimension mismatch") {
        auto layer = random_layer(4, 6, 2, rng);
        VectorXd bad = VectorXd::Zero(5);
        CHECK_THROWS_AS(lora_forward(layer, bad), ShapeError);
    }
}

TEST_CASE("factor gradients") {
    Rng rng(23);

    SUBCASE("zero upstream gradient") {
        auto layer = random_layer(5, 7, 2, rng);
        auto g = lora_gradients(layer, MatrixXd::Zero(5, 7));
        CHECK(g.grad_b.isZero(0.0));
        CHECK(g.grad_a.isZero(0.0));
    }

    SUBCASE("zero B blocks the A gradient but not the B gradient") {
        auto layer = random_layer(5, 7, 2, rng);
        layer.b.setZero();
        MatrixXd g_w = random_matrix(5, 7, rng);
        auto g = lora_gradients(layer, g_w);
        CHECK(g.grad_a.isZero(0.0));
        CHECK(g.grad_b == g_w * layer.a.transpose());
    }

    SUBCASE("matches central finite differences") {
        auto layer = random_layer(5, 7, 2, rng);
        MatrixXd x = random_matrix(7, 3, rng);
        MatrixXd y = random_matrix(5, 3, rng);
        MatrixXd g_w = ((layer.w0 + layer.b * layer.a) * x - y) * x.transpose();
        auto g = lora_gradients(layer, g_w);

        const double step = 1e-6;
        auto check_entry = [&](MatrixXd& target, int i, int j, double analytic) {
            const double saved = target(i, j);
            target(i, j) = saved + step;
            const double up = quad_loss(layer, x, y);
            target(i, j) = saved - step;
            const double down = quad_loss(layer, x, y);
            target(i, j) = saved;
            const double numeric = (up - down) / (2 * step);
            CHECK(analytic == doctest::Approx(numeric).epsilon(1e-4));
        };
        for (int i = 0; i < layer.b.rows(); ++i)
            for (int j = 0; j < layer.b.cols(); ++j)
                check_entry(layer.b, i, j, g.grad_b(i, j));
        for (int i = 0; i < layer.a.rows(); ++i)
            for (int j = 0; j < layer.a.cols(); ++j)
                check_entry(layer.a, i, j, g.grad_a(i, j));
    }

    SUBCASE("shape mismatch") {
        auto layer = random_layer(5, 7, 2, rng);
        CHECK_THROWS_AS(lora_gradients(layer, MatrixXd::Zero(5, 6)), ShapeError);
    }
}

TEST_CASE("model construction is deterministic under seed") {
    auto m1 = new_lora_model(kTwoLayer, 3, 99);
    auto m2 = new_lora_model(kTwoLayer, 3, 99);
    REQUIRE(m1.size() == m2.size());
    for (std::size_t l = 0; l < m1.size(); ++l) {
        CHECK(m1[l].w0 == m2[l].w0);
        CHECK(m1[l].b == m2[l].b);
        CHECK(m1[l].a == m2[l].a);
    }
    auto m3 = new_lora_model(kTwoLayer, 3, 100);
    CHECK(m1[0].w0 != m3[0].w0);
}
