// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "feddlora/arbvs.hpp"
#include "feddlora/fed.hpp"
#include "feddlora/gap.hpp"
#include "feddlora/harness.hpp"
#include "feddlora/lora.hpp"
#include "feddlora/rng.hpp"
#include "feddlora/scenario.hpp"

using namespace feddlora;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int g_failures = 0;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool cond, const std::string& msg) {
        if (!cond && pass) {
            pass = false;
            detail = msg;
        }
    }
};

using CriterionFn = Outcome (*)();

void run_criterion(int id, const std::string& name, CriterionFn fn, double budget_s) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = fn();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget_s) {
        out.pass = false;
        out.detail += (out.detail.empty() ? "" : "; ") + std::string("runtime ") +
                      std::to_string(secs) + " s exceeds budget " + std::to_string(budget_s);
    }
    std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", out.pass ? "PASS" : "FAIL", id,
                name.c_str(), secs, out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++g_failures;
}

MatrixXd random_matrix(int h, int w, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    MatrixXd m(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) m(i, j) = d(rng);
    return m;
}

// ---------------------------------------------------------------------------
// 1. LoRA forward/gradient correctness + parameter identities
// ---------------------------------------------------------------------------

Outcome criterion1() {
    Outcome out;
    Rng rng(101);
    auto loss_through_forward = [](const LoraLayer& layer, const MatrixXd& x,
                                   const MatrixXd& y) {
        MatrixXd out_m = layer.w0 * x + layer.b * (layer.a * x);
        return 0.5 * (out_m - y).squaredNorm();
    };

    for (auto [h, w] : {std::pair{5, 7}, std::pair{16, 16}}) {
        for (int rank : {1, 2, 4}) {
            LoraLayer layer;
            layer.w0 = random_matrix(h, w, rng);
            layer.b = random_matrix(h, rank, rng);
            layer.a = random_matrix(rank, w, rng);
            layer.rank = rank;
            MatrixXd x = random_matrix(w, 3, rng);
            MatrixXd y = random_matrix(h, 3, rng);

            // forward against the materialized product
            MatrixXd dense = (layer.w0 + layer.b * layer.a) * x;
            MatrixXd fwd = lora_forward(layer, x);
            out.require((fwd - dense).norm() <= 1e-10 * x.norm(),
                        "forward mismatch vs dense product");

            MatrixXd g_w = ((layer.w0 + layer.b * layer.a) * x - y) * x.transpose();
            auto grads = lora_gradients(layer, g_w);
            const double step = 1e-6;
            auto fd_check = [&](MatrixXd& target, int i, int j, double analytic) {
                const double saved = target(i, j);
                target(i, j) = saved + step;
                const double up = loss_through_forward(layer, x, y);
                target(i, j) = saved - step;
                const double down = loss_through_forward(layer, x, y);
                target(i, j) = saved;
                const double numeric = (up - down) / (2 * step);
                const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
                out.require(std::abs(analytic - numeric) <= 1e-4 * scale,
                            "finite-difference mismatch at rank " + std::to_string(rank));
            };
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < rank; ++j) fd_check(layer.b, i, j, grads.grad_b(i, j));
            for (int i = 0; i < rank; ++i)
                for (int j = 0; j < w; ++j) fd_check(layer.a, i, j, grads.grad_a(i, j));
        }
    }

    // parameter-count identities r(h+w), exact integers
    for (int h : {3, 16, 64, 100})
        for (int w : {3, 10, 32})
            for (int r : {1, 2, 3}) {
                ModelSpec spec{{{h, w}}};
                auto c = param_counts(spec, r);
                out.require(c.full == static_cast<long long>(h) * w, "full count");
                out.require(c.lora == static_cast<long long>(r) * (h + w), "lora count");
            }
    ModelSpec two{{{64, 32}, {32, 10}}};
    out.require(param_counts(two, 2).lora == 276, "two-layer count");
    out.require(rank_upper_bound(two, 32) == 10, "rank bound");
    return out;
}

// ---------------------------------------------------------------------------
// 2. SVD gap suite: optimality sampling, bound fuzz, tight equality
// ---------------------------------------------------------------------------

Outcome criterion2() {
    Outcome out;
    Rng rng(202);

    // Sampled low-rank candidates never beat the truncation (20 x 1000).
    for (int trial = 0; trial < 20; ++trial) {
        const int h = 4 + static_cast<int>(rng() % 20);
        const int w = 4 + static_cast<int>(rng() % 20);
        const int r = 1 + static_cast<int>(rng() % 3);
        MatrixXd g = random_matrix(h, w, rng);
        const double best = svd_truncate(g, r).residual.norm();
        for (int c = 0; c < 1000; ++c) {
            MatrixXd cand = random_matrix(h, r, rng) * random_matrix(r, w, rng);
            if ((g - cand).norm() < best - 1e-12) {
                out.require(false, "sampled candidate beat the truncation");
                return out;
            }
        }
    }

    // 10,000 fuzz spectra with sigma_max <= M.
    const double m = 0.1;
    std::uniform_real_distribution<double> u(0.0, m);
    for (int trial = 0; trial < 10000; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 12);
        const int r = 1 + static_cast<int>(rng() % k);
        VectorXd sigma(k);
        for (int i = 0; i < k; ++i) sigma[i] = u(rng);
        std::sort(sigma.data(), sigma.data() + k, std::greater<double>());
        auto rep = layer_gap_bound(sigma, r, m);
        out.require(rep.ok, "tail bound violated on admissible spectrum");
    }

    // Tight case: all sigma = M, exact to 1e-12 per layer and in total.
    for (int k : {2, 5, 9})
        for (int r = 1; r <= k; ++r) {
            auto rep = layer_gap_bound(VectorXd::Constant(k, m), r, m);
            out.require(std::abs(rep.residual_norm - rep.bound) <= 1e-12,
                        "flat spectrum not tight at layer level");
        }
    auto l1 = layer_gap_bound(VectorXd::Constant(6, m), 2, m);
    auto l2 = layer_gap_bound(VectorXd::Constant(4, m), 2, m);
    auto total = total_gap({l1, l2}, 2, m);
    out.require(std::abs(total.residual_norm - total.bound) <= 1e-12,
                "flat spectra not tight at model level");
    return out;
}

// ---------------------------------------------------------------------------
// 3. Scheduler optimality vs brute force on 200 random instances
// ---------------------------------------------------------------------------

Outcome criterion3() {
    Outcome out;
    const ModelSpec spec{{{64, 32}, {10, 64}}};
    ObjectiveParams params;
    params.total_singulars = spec.total_singular_values();
    params.layers = spec.layer_count();
    Rng rng(303);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int trial = 0; trial < 200; ++trial) {
        RadioConfig radio;
        radio.total_bandwidth = std::pow(10.0, 2.5 + 4.5 * u(rng));
        SpawnPolicy policy;
        policy.target_population = 3 + static_cast<int>(rng() % 8);  // |U| <= 10
        auto vehicles = spawn_initial(policy, radio, derive_seed(303, trial));

        auto fast = arbvs_schedule(vehicles, spec, radio, params, 8, 4);
        auto slow = brute_force_schedule(vehicles, spec, radio, params, 8, 4);
        out.require(fast.objective == slow.objective,
                    "objective mismatch on instance " + std::to_string(trial));
        if (!fast.empty())
            out.require(validate_decision(fast, vehicles, spec, radio, 4).ok,
                        "greedy decision failed validation");
        if (!slow.empty())
            out.require(validate_decision(slow, vehicles, spec, radio, 4).ok,
                        "brute-force decision failed validation");
    }
    return out;
}

// ---------------------------------------------------------------------------
// 4. Bisection contract on 500 feasible vehicles + rank monotonicity
// ---------------------------------------------------------------------------

Outcome criterion4() {
    Outcome out;
    const ModelSpec spec{{{64, 32}, {10, 64}}};
    RadioConfig radio;
    SpawnPolicy policy;
    const int epochs = 4;

    int checked = 0;
    for (int batch = 0; checked < 500 && batch < 200; ++batch) {
        for (const auto& v : spawn_initial(policy, radio, derive_seed(404, batch))) {
            if (checked >= 500) break;
            // feasible at the hardest rank => feasible for the whole sweep
            if (!min_bandwidth(v, 8, spec, radio, epochs)) continue;
            double prev = 0;
            for (int r = 1; r <= 8; ++r) {
                auto b = min_bandwidth(v, r, spec, radio, epochs);
                if (!b) {
                    out.require(false, "feasibility lost at lower rank");
                    break;
                }
                const double slack =
                    sojourn_time(v, radio) - local_train_delay(v, r, spec, epochs);
                const double required =
                    radio.bit_width * r * spec.lora_params_per_rank() / slack;
                out.require(uplink_rate(v, *b, radio) >= required, "rate below requirement");
                out.require(uplink_rate(v, 0.999 * *b, radio) < required,
                            "0.999 b still meets the rate (not minimal)");
                out.require(*b >= prev, "b_min decreased with rank");
                prev = *b;
            }
            ++checked;
        }
    }
    out.require(checked == 500, "only " + std::to_string(checked) + " feasible vehicles");
    return out;
}

// ---------------------------------------------------------------------------
// 5. Scheduling cost grows ~linearly in the vehicle count
// ---------------------------------------------------------------------------

Outcome criterion5() {
    Outcome out;
    const ModelSpec spec{{{64, 32}, {10, 64}}};
    RadioConfig radio;
    ObjectiveParams params;
    params.total_singulars = spec.total_singular_values();
    params.layers = spec.layer_count();

    auto timed = [&](int population) {
        SpawnPolicy policy;
        policy.target_population = population;
        auto vehicles = spawn_initial(policy, radio, 505 + population);
        arbvs_schedule(vehicles, spec, radio, params, 32, 4);  // warm-up
        std::vector<double> trials;
        for (int t = 0; t < 3; ++t) {
            const auto start = std::chrono::steady_clock::now();
            arbvs_schedule(vehicles, spec, radio, params, 32, 4);
            trials.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count());
        }
        std::sort(trials.begin(), trials.end());
        return trials[1];  // median of three
    };

    timed(100);  // extra warm-up at a small size
    const double t200 = timed(200);
    const double t400 = timed(400);
    std::ostringstream ss;
    ss << "median 200: " << t200 * 1e3 << " ms, 400: " << t400 * 1e3 << " ms, ratio "
       << t400 / t200;
    out.detail = ss.str();
    if (t400 > 2.5 * t200) {
        out.pass = false;
        out.detail += " exceeds 2.5";
    }
    return out;
}

// ---------------------------------------------------------------------------
// 6. Directional end-to-end reproduction on the toy task
// ---------------------------------------------------------------------------

ExperimentConfig toy_run_config(std::uint64_t master_seed) {
    ExperimentConfig cfg;
    cfg.rounds = 60;
    cfg.data_mode = "noniid";
    cfg.class_separation = 0.6;
    cfg.threads = 2;
    cfg.scenario_seed = derive_seed(master_seed, 101);
    cfg.data_seed = derive_seed(master_seed, 102);
    cfg.train_seed = derive_seed(master_seed, 103);
    return cfg;
}

Outcome criterion6() {
    Outcome out;
    double ratio_sum = 0, r02_final_sum = 0, r06_final_sum = 0;
    std::ostringstream detail;

    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        ExperimentConfig base = toy_run_config(seed);

        ExperimentConfig oracle_cfg = base;
        oracle_cfg.scheduler = "fedavg_oracle";
        auto oracle = run_experiment(oracle_cfg);

        ExperimentConfig arbvs_cfg = base;
        arbvs_cfg.scheduler = "arbvs";
        auto arbvs = run_experiment(arbvs_cfg);

        ExperimentConfig r02_cfg = base;
        r02_cfg.scheduler = "random";
        r02_cfg.random_fraction = 0.2;
        r02_cfg.random_rank = 2;
        auto r02 = run_experiment(r02_cfg);

        ExperimentConfig r06_cfg = r02_cfg;
        r06_cfg.random_fraction = 0.6;
        auto r06 = run_experiment(r06_cfg);

        const double oracle_final = oracle.metrics.back().test_acc;
        const double target = 0.8 * oracle_final;
        const long long oracle_bits = oracle.metrics.back().uplink_bits_cum;

        // (a) bits spent by ARBVS to reach 0.8x the oracle's final accuracy
        long long arbvs_bits = -1;
        for (const auto& m : arbvs.metrics)
            if (m.test_acc >= target) {
                arbvs_bits = m.uplink_bits_cum;
                break;
            }
        out.require(arbvs_bits >= 0,
                    "seed " + std::to_string(seed) + ": target accuracy never reached");
        if (arbvs_bits >= 0) ratio_sum += static_cast<double>(arbvs_bits) / oracle_bits;

        // (b) time-to-target ordering must hold on every seed
        auto arbvs_time = time_to_accuracy(arbvs.metrics, target);
        auto r02_time = time_to_accuracy(r02.metrics, target);
        out.require(arbvs_time.has_value(),
                    "seed " + std::to_string(seed) + ": no time-to-target");
        if (r02_time.has_value())
            out.require(*arbvs_time < *r02_time,
                        "seed " + std::to_string(seed) + ": random(0.2) was faster");

        r02_final_sum += r02.metrics.back().test_acc;
        r06_final_sum += r06.metrics.back().test_acc;
        detail << "seed " << seed << ": oracle " << oracle_final << ", bits% "
               << 100.0 * arbvs_bits / oracle_bits << ", r02 "
               << (r02_time ? "reached" : "not-reached") << "; ";
    }

    const double mean_ratio = ratio_sum / 3.0;
    out.require(mean_ratio < 0.25, "mean uplink ratio " + std::to_string(mean_ratio));

    // (c) richer random participation does not lose accuracy (3-seed mean)
    out.require(r06_final_sum >= r02_final_sum,
                "random(0.6) mean final below random(0.2)");
    detail << "mean bits ratio " << mean_ratio << ", r02/r06 mean finals "
           << r02_final_sum / 3 << "/" << r06_final_sum / 3;
    if (out.pass) out.detail = detail.str();
    return out;
}

// ---------------------------------------------------------------------------
// 7. Byte-identical metrics at any thread count
// ---------------------------------------------------------------------------

Outcome criterion7() {
    Outcome out;
    ExperimentConfig cfg;
    cfg.rounds = 5;
    cfg.samples_per_icv = 100;
    cfg.test_size = 400;

    auto render = [](const ExperimentResult& r) {
        std::ostringstream ss;
        write_metrics_csv(r.metrics, ss);
        return ss.str();
    };
    const std::string first = render(run_experiment(cfg));
    const std::string second = render(run_experiment(cfg));
    ExperimentConfig threaded = cfg;
    threaded.threads = 4;
    const std::string third = render(run_experiment(threaded));
    ExperimentConfig threaded8 = cfg;
    threaded8.threads = 8;
    const std::string fourth = render(run_experiment(threaded8));

    out.require(first == second, "repeat run differs");
    out.require(first == third, "4-thread run differs");
    out.require(first == fourth, "8-thread run differs");
    return out;
}

// ---------------------------------------------------------------------------
// 8. Bound formulas against independent plug-in arithmetic
// ---------------------------------------------------------------------------

Outcome criterion8() {
    Outcome out;
    Rng rng(808);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int trial = 0; trial < 100; ++trial) {
        BoundParams p;
        p.eta = 1e-3 + 0.1 * u(rng);
        p.beta = 0.1 + 10 * u(rng);
        p.sigma2 = 0.1 + 10 * u(rng);
        p.m = 0.01 + u(rng);
        p.layers = 1 + static_cast<int>(rng() % 10);
        const int rmax = 1 + static_cast<int>(rng() % 8);
        p.total_singulars = p.layers * rmax + 1 + static_cast<int>(rng() % 100);
        p.loss_init = 5 * u(rng);
        p.loss_star = p.loss_init * u(rng);
        p.rounds = 1 + static_cast<int>(rng() % 500);
        const int s = 1 + static_cast<int>(rng() % 50);
        const int r = 1 + static_cast<int>(rng() % rmax);
        const double loss_t = 5 * u(rng);
        const double grad2 = 10 * u(rng);

        // independent arithmetic, long double, different grouping
        const long double gap = static_cast<long double>(p.total_singulars) -
                                static_cast<long double>(p.layers) * r;
        const long double descent_oracle =
            static_cast<long double>(loss_t) -
            static_cast<long double>(p.eta) * grad2 / 2.0L +
            static_cast<long double>(p.eta) * p.eta * p.beta * p.sigma2 / (2.0L * s) +
            static_cast<long double>(p.eta) / 2.0L * p.m * p.m * gap;
        const double got_descent = descent_bound(p, s, r, loss_t, grad2).value;
        out.require(std::abs(got_descent - static_cast<double>(descent_oracle)) <=
                        1e-12 * std::max(1.0, std::abs(static_cast<double>(descent_oracle))),
                    "descent bound differs from oracle");

        const long double avg_oracle =
            2.0L / (static_cast<long double>(p.eta) * p.rounds) * (p.loss_init - p.loss_star) +
            static_cast<long double>(p.eta) * p.beta * p.sigma2 / s +
            static_cast<long double>(p.m) * p.m * gap;
        const double got_avg = avg_grad_bound(p, s, r);
        out.require(std::abs(got_avg - static_cast<double>(avg_oracle)) <=
                        1e-12 * std::max(1.0, std::abs(static_cast<double>(avg_oracle))),
                    "average-gradient bound differs from oracle");
    }

    // strict monotonicity on grids
    BoundParams p;
    p.total_singulars = 100;
    p.layers = 10;
    p.loss_init = 2.3;
    p.rounds = 100;
    for (int s = 1; s < 30; ++s)
        out.require(avg_grad_bound(p, s + 1, 4) < avg_grad_bound(p, s, 4),
                    "not decreasing in selection size");
    for (int r = 1; r < 9; ++r)
        out.require(avg_grad_bound(p, 5, r + 1) < avg_grad_bound(p, 5, r),
                    "not decreasing in rank");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    struct Entry {
        int id;
        const char* name;
        CriterionFn fn;
        double budget_s;
    };
    const Entry entries[] = {
        {1, "LoRA forward/gradient correctness and parameter identities", criterion1, 5},
        {2, "SVD gap suite (optimality sampling, bound fuzz, tight case)", criterion2, 30},
        {3, "scheduler optimality vs brute force, 200 instances", criterion3, 60},
        {4, "bisection contract on 500 feasible vehicles", criterion4, 10},
        {5, "near-linear scheduling cost in the vehicle count", criterion5, 120},
        {6, "directional end-to-end reproduction on the toy task", criterion6, 600},
        {7, "byte-identical metrics at any thread count", criterion7, 120},
        {8, "bound formulas vs independent plug-in oracles", criterion8, 30},
    };
    for (const auto& e : entries)
        if (only == 0 || only == e.id) run_criterion(e.id, e.name, e.fn, e.budget_s);
    return g_failures;
}
