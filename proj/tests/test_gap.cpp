#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "feddlora/gap.hpp"
#include "feddlora/rng.hpp"

using namespace feddlora;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(int h, int w, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    MatrixXd m(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) m(i, j) = d(rng);
    return m;
}

// Random matrix with a prescribed spectrum (QR-orthogonal factors).
MatrixXd matrix_with_spectrum(const VectorXd& sigma, int h, int w, Rng& rng) {
    const int k = static_cast<int>(sigma.size());
    Eigen::HouseholderQR<MatrixXd> qu(random_matrix(h, k, rng));
    Eigen::HouseholderQR<MatrixXd> qv(random_matrix(w, k, rng));
    MatrixXd u = qu.householderQ() * MatrixXd::Identity(h, k);
    MatrixXd v = qv.householderQ() * MatrixXd::Identity(w, k);
    return u * sigma.asDiagonal() * v.transpose();
}

}  // namespace

TEST_CASE("truncation of a diagonal matrix") {
    MatrixXd g = Eigen::Vector3d(3, 2, 1).asDiagonal();
    auto t = svd_truncate(g, 1);
    CHECK(t.singular_values.size() == 3);
    CHECK(t.singular_values[0] == doctest::Approx(3.0));
    CHECK(t.residual.norm() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    CHECK(t.residual.norm() == doctest::Approx(2.2360679774997896).epsilon(1e-12));

    auto full = svd_truncate(g, 3);
    CHECK(full.residual.norm() <= 1e-12 * g.norm());
}

TEST_CASE("truncation reconstructs exactly and orders singular values") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int h = 2 + static_cast<int>(rng() % 63);
        const int w = 2 + static_cast<int>(rng() % 63);
        const int k = std::min(h, w);
        const int r = 1 + static_cast<int>(rng() % k);
        MatrixXd g = random_matrix(h, w, rng);
        auto t = svd_truncate(g, r);
        CHECK(((t.retained + t.residual) - g).norm() <= 1e-9 * g.norm());
        for (int i = 0; i + 1 < k; ++i) {
            CHECK(t.singular_values[i] >= t.singular_values[i + 1]);
            CHECK(t.singular_values[i + 1] >= 0.0);
        }
        // tail norm route agrees with the matrix route
        double tail2 = 0;
        for (int i = r; i < k; ++i) tail2 += t.singular_values[i] * t.singular_values[i];
        CHECK(t.residual.norm() == doctest::Approx(std::sqrt(tail2)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(svd_truncate(MatrixXd::Identity(4, 4), 0), InvalidRankError);
    CHECK_THROWS_AS(svd_truncate(MatrixXd::Identity(4, 4), 5), InvalidRankError);
}

TEST_CASE("truncation is deterministic") {
    Rng rng(17);
    MatrixXd g = random_matrix(12, 9, rng);
    auto a = svd_truncate(g, 3);
    auto b = svd_truncate(g, 3);
    CHECK(a.retained == b.retained);
    CHECK(a.singular_values == b.singular_values);
}

TEST_CASE("truncation is never beaten by sampled low-rank candidates") {
    Rng rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        MatrixXd g = random_matrix(6, 4, rng);
        auto t = svd_truncate(g, 2);
        const double best = t.residual.norm();
        for (int c = 0; c < 200; ++c) {
            MatrixXd candidate = random_matrix(6, 2, rng) * random_matrix(2, 4, rng);
            CHECK((g - candidate).norm() >= best - 1e-12);
        }
    }
}

TEST_CASE("per-layer tail bound") {
    SUBCASE("flat spectrum is tight") {
        const double m = 0.37;
        VectorXd sigma = VectorXd::Constant(5, m);
        auto rep = layer_gap_bound(sigma, 2, m);
        CHECK(rep.assumption_holds);
        CHECK(rep.ok);
        CHECK(rep.residual_norm == doctest::Approx(m * std::sqrt(3.0)).epsilon(1e-12));
        CHECK(std::abs(rep.residual_norm - rep.bound) <= 1e-12);
    }
    SUBCASE("worked example") {
        VectorXd sigma(3);
        sigma << 0.1, 0.05, 0.01;
        auto rep = layer_gap_bound(sigma, 1, 0.1);
        CHECK(rep.residual_norm == doctest::Approx(std::sqrt(0.0025 + 0.0001)).epsilon(1e-12));
        CHECK(rep.residual_norm == doctest::Approx(0.0509901951359).epsilon(1e-9));
        CHECK(rep.bound == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-12));
        CHECK(rep.ok);
    }
    SUBCASE("full retention leaves nothing") {
        VectorXd sigma(3);
        sigma << 0.1, 0.05, 0.01;
        auto rep = layer_gap_bound(sigma, 3, 0.1);
        CHECK(rep.residual_norm == 0.0);
        CHECK(rep.bound == 0.0);
        CHECK(rep.ok);
    }
    SUBCASE("oversized top singular value is flagged, not thrown") {
        VectorXd sigma(3);
        sigma << 0.5, 0.05, 0.01;
        auto rep = layer_gap_bound(sigma, 1, 0.1);
        CHECK_FALSE(rep.assumption_holds);
        CHECK_FALSE(rep.ok);
    }
}

TEST_CASE("whole-model tail bound") {
    const double m = 0.1;
    SUBCASE("two identical layers add in quadrature") {
        VectorXd sigma(4);
        sigma << 0.09, 0.07, 0.05, 0.02;
        auto layer = layer_gap_bound(sigma, 2, m);
        auto total = total_gap({layer, layer}, 2, m);
        CHECK(total.residual_norm ==
              doctest::Approx(layer.residual_norm * std::sqrt(2.0)).epsilon(1e-12));
        CHECK(total.ok);
    }
    SUBCASE("flat spectra are tight for the whole model") {
        auto l1 = layer_gap_bound(VectorXd::Constant(6, m), 2, m);
        auto l2 = layer_gap_bound(VectorXd::Constant(4, m), 2, m);
        auto total = total_gap({l1, l2}, 2, m);
        // K = 10, L = 2, r = 2
        CHECK(total.bound == doctest::Approx(m * std::sqrt(10.0 - 4.0)).epsilon(1e-12));
        CHECK(std::abs(total.residual_norm - total.bound) <= 1e-12);
    }
    SUBCASE("random spectra under the assumption never violate") {
        Rng rng(31);
        std::uniform_real_distribution<double> u(0.0, m);
        for (int trial = 0; trial < 2000; ++trial) {
            const int layers = 1 + static_cast<int>(rng() % 4);
            const int r = 1 + static_cast<int>(rng() % 3);
            std::vector<GapLayerReport> reps;
            for (int l = 0; l < layers; ++l) {
                const int k = r + static_cast<int>(rng() % 6);
                VectorXd sigma(k);
                for (int i = 0; i < k; ++i) sigma[i] = u(rng);
                std::sort(sigma.data(), sigma.data() + k, std::greater<double>());
                auto rep = layer_gap_bound(sigma, r, m);
                CHECK(rep.ok);
                reps.push_back(rep);
            }
            CHECK(total_gap(reps, r, m).ok);
        }
    }
}

TEST_CASE("gap report ties layers together") {
    Rng rng(41);
    const double m = 10.0;  // generous so the assumption holds
    std::vector<MatrixXd> grads{random_matrix(8, 5, rng), random_matrix(6, 6, rng)};
    auto rep = gap_report(grads, 2, m);
    REQUIRE(rep.layers.size() == 2);
    double sum2 = 0;
    for (const auto& l : rep.layers) sum2 += l.residual_norm * l.residual_norm;
    CHECK(rep.total_residual_norm == doctest::Approx(std::sqrt(sum2)).epsilon(1e-12));
    CHECK(rep.bound_satisfied);
}

TEST_CASE("one-round descent bound") {
    BoundParams p;
    p.eta = 0.01;
    p.beta = 1.0;
    p.sigma2 = 1.0;
    p.m = 0.1;
    p.total_singulars = 100;
    p.layers = 10;

    SUBCASE("plug-in example") {
        auto b = descent_bound(p, 5, 4, 1.0, 0.0);
        const double oracle = 1.0 + 0.5 * 0.01 * 0.01 * 1.0 * 1.0 / 5.0 +
                              0.5 * 0.01 * 0.1 * 0.1 * (100.0 - 10.0 * 4.0);
        CHECK(b.value == doctest::Approx(oracle).epsilon(1e-15));
        CHECK(b.value == doctest::Approx(1.00301).epsilon(1e-9));
        CHECK_FALSE(b.eta_warning);
    }
    SUBCASE("vanishing learning rate recovers the current loss") {
        BoundParams q = p;
        q.eta = 0.0;
        CHECK(descent_bound(q, 5, 4, 0.73, 123.0).value == 0.73);
    }
    SUBCASE("full spectral retention removes the gap term") {
        auto b = descent_bound(p, 5, 10, 1.0, 0.0);  // r = K/L
        CHECK(b.value == doctest::Approx(1.0 + 0.5 * 1e-4 / 5.0).epsilon(1e-15));
    }
    SUBCASE("step size beyond 1/beta is flagged") {
        BoundParams q = p;
        q.beta = 150.0;
        CHECK(descent_bound(q, 5, 4, 1.0, 0.0).eta_warning);
    }
    CHECK_THROWS_AS(descent_bound(p, 0, 4, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("average-gradient bound") {
    BoundParams p;
    p.eta = 0.01;
    p.beta = 1.0;
    p.sigma2 = 1.0;
    p.m = 0.1;
    p.total_singulars = 100;
    p.layers = 10;
    p.loss_init = 2.3;
    p.loss_star = 0.0;
    p.rounds = 100;

    SUBCASE("plug-in example") {
        const double oracle =
            2.0 / (0.01 * 100) * 2.3 + 0.01 / 5.0 + 0.01 * (100.0 - 40.0);
        CHECK(avg_grad_bound(p, 5, 4) == doctest::Approx(oracle).epsilon(1e-15));
        CHECK(avg_grad_bound(p, 5, 4) == doctest::Approx(5.202).epsilon(1e-12));
    }
    SUBCASE("strictly decreasing in selection size and rank") {
        for (int s = 1; s < 20; ++s) CHECK(avg_grad_bound(p, s + 1, 4) < avg_grad_bound(p, s, 4));
        for (int r = 1; r < 9; ++r) CHECK(avg_grad_bound(p, 5, r + 1) < avg_grad_bound(p, 5, r));
    }
    SUBCASE("linear in rank") {
        const int cap = 9;
        CHECK(avg_grad_bound(p, 5, 0) - avg_grad_bound(p, 5, cap) ==
              doctest::Approx(0.1 * 0.1 * 10 * cap).epsilon(1e-12));
    }
    BoundParams bad = p;
    bad.rounds = 0;
    CHECK_THROWS_AS(avg_grad_bound(bad, 5, 4), std::invalid_argument);
}

TEST_CASE("prescribed spectra survive the truncate-report round trip") {
    Rng rng(53);
    const double m = 0.1;
    std::uniform_real_distribution<double> u(0.0, m);
    for (int trial = 0; trial < 30; ++trial) {
        const int h = 4 + static_cast<int>(rng() % 12);
        const int w = 4 + static_cast<int>(rng() % 12);
        const int k = std::min(h, w);
        VectorXd sigma(k);
        for (int i = 0; i < k; ++i) sigma[i] = u(rng);
        std::sort(sigma.data(), sigma.data() + k, std::greater<double>());
        MatrixXd g = matrix_with_spectrum(sigma, h, w, rng);
        auto t = svd_truncate(g, 2);
        for (int i = 0; i < k; ++i)
            CHECK(t.singular_values[i] == doctest::Approx(sigma[i]).epsilon(1e-8));
        auto rep = layer_gap_bound(t.singular_values, 2, m + 1e-9);
        CHECK(rep.ok);
    }
}
