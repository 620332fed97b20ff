#include "feddlora/arbvs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "feddlora/rng.hpp"

namespace feddlora {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double ScheduleDecision::total_bandwidth() const {
    double sum = 0;
    for (const auto& [id, b] : bandwidth_hz) sum += b;
    return sum;
}

std::vector<int> ScheduleDecision::aggregated_ids() const {
    std::vector<int> ids;
    for (int id : selected) {
        auto it = per_vehicle.find(id);
        if (it == per_vehicle.end() || it->second.feasible) ids.push_back(id);
    }
    return ids;
}

int ScheduleDecision::dropped_count() const {
    return static_cast<int>(selected.size()) - static_cast<int>(aggregated_ids().size());
}

double objective_value(const ObjectiveParams& p, int s_size, int rank) {
    if (s_size < 0) throw std::invalid_argument("s_size must be >= 0");
    if (s_size == 0) return kInf;
    const double gap_cap =
        static_cast<double>(p.total_singulars) - static_cast<double>(p.layers) * rank;
    return p.eta * p.beta * p.sigma2 / static_cast<double>(s_size) + p.m * p.m * gap_cap;
}

std::optional<double> min_bandwidth(const Vehicle& v, int rank, const ModelSpec& model,
                                    const RadioConfig& radio, int epochs, double eps) {
    if (eps <= 0 || eps > 1e-2) throw std::invalid_argument("eps must be in (0, 1e-2]");
    const double slack = sojourn_time(v, radio) - local_train_delay(v, rank, model, epochs);
    if (!(slack > 0)) return std::nullopt;  // training alone exceeds the sojourn

    const double bits =
        static_cast<double>(radio.bit_width) * rank * model.lora_params_per_rank();
    const double required_rate = bits / slack;

    double lo = 1.0;  // documented lower endpoint
    double hi = radio.total_bandwidth;
    if (uplink_rate(v, hi, radio) < required_rate) return std::nullopt;
    if (uplink_rate(v, lo, radio) >= required_rate) return lo;

    // Invariant: rate(lo) < required <= rate(hi); the rate is strictly
    // increasing in bandwidth, so the returned hi always meets the rate.
    while (hi - lo > eps * hi) {
        const double mid = 0.5 * (lo + hi);
        if (uplink_rate(v, mid, radio) >= required_rate)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

GreedyResult greedy_select(const std::vector<std::pair<int, std::optional<double>>>& b_mins,
                           double budget) {
    if (budget <= 0) throw std::invalid_argument("budget must be > 0");
    std::vector<std::pair<double, int>> feasible;  // (b_min, id)
    for (const auto& [id, b] : b_mins)
        if (b) feasible.emplace_back(*b, id);
    std::sort(feasible.begin(), feasible.end());

    GreedyResult res;
    for (const auto& [b, id] : feasible) {
        if (res.total_bandwidth + b > budget) break;
        res.total_bandwidth += b;
        res.selected.push_back(id);
    }
    return res;
}

namespace {

struct Candidate {
    double objective = kInf;
    int s_size = 0;
    int rank = 0;
    double total_bandwidth = kInf;
};

// Tie order: smaller objective, then more vehicles, then higher rank, then
// less bandwidth.
bool better(const Candidate& a, const Candidate& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    if (a.s_size != b.s_size) return a.s_size > b.s_size;
    if (a.rank != b.rank) return a.rank > b.rank;
    return a.total_bandwidth < b.total_bandwidth;
}

std::map<int, PerVehicleEval> evaluate_all(const std::vector<Vehicle>& vehicles, int rank,
                                           const ModelSpec& model, const RadioConfig& radio,
                                           int epochs, double eps) {
    std::map<int, PerVehicleEval> evals;
    for (const auto& v : vehicles) {
        PerVehicleEval e;
        e.t_sojourn = sojourn_time(v, radio);
        e.t_train = local_train_delay(v, rank, model, epochs);
        auto b = min_bandwidth(v, rank, model, radio, epochs, eps);
        if (b) {
            e.b_min = *b;
            e.t_upload = upload_delay(rank, model, uplink_rate(v, *b, radio), radio);
            e.feasible = true;
        }
        evals.emplace(v.id, e);
    }
    return evals;
}

}  // namespace

ScheduleDecision arbvs_schedule(const std::vector<Vehicle>& vehicles, const ModelSpec& model,
                                const RadioConfig& radio, const ObjectiveParams& params,
                                int rank_cap, int epochs, double eps) {
    const int max_rank = rank_upper_bound(model, rank_cap);

    Candidate best;
    int best_rank = 0;
    GreedyResult best_greedy;
    std::map<int, PerVehicleEval> best_evals;

    for (int r = 1; r <= max_rank; ++r) {
        auto evals = evaluate_all(vehicles, r, model, radio, epochs, eps);
        std::vector<std::pair<int, std::optional<double>>> b_mins;
        b_mins.reserve(vehicles.size());
        for (const auto& v : vehicles) {
            const auto& e = evals.at(v.id);
            b_mins.emplace_back(v.id, e.feasible ? std::optional<double>(e.b_min)
                                                 : std::nullopt);
        }
        auto greedy = greedy_select(b_mins, radio.total_bandwidth);

        Candidate cand{objective_value(params, static_cast<int>(greedy.selected.size()), r),
                       static_cast<int>(greedy.selected.size()), r, greedy.total_bandwidth};
        if (better(cand, best)) {
            best = cand;
            best_rank = r;
            best_greedy = std::move(greedy);
            best_evals = std::move(evals);
        }
    }

    ScheduleDecision d;
    if (best_greedy.selected.empty()) return d;  // nothing feasible at any rank

    d.rank = best_rank;
    d.selected = best_greedy.selected;
    d.objective = best.objective;
    d.per_vehicle = std::move(best_evals);
    for (int id : d.selected) d.bandwidth_hz[id] = d.per_vehicle.at(id).b_min;
    return d;
}

ScheduleDecision brute_force_schedule(const std::vector<Vehicle>& vehicles,
                                      const ModelSpec& model, const RadioConfig& radio,
                                      const ObjectiveParams& params, int rank_cap, int epochs,
                                      double eps) {
    if (vehicles.size() > 16)
        throw GuardError("brute force capped at 16 vehicles, got " +
                         std::to_string(vehicles.size()));
    const int max_rank = rank_upper_bound(model, rank_cap);

    Candidate best;
    int best_rank = 0;
    std::vector<int> best_subset;
    std::map<int, PerVehicleEval> best_evals;

    for (int r = 1; r <= max_rank; ++r) {
        auto evals = evaluate_all(vehicles, r, model, radio, epochs, eps);
        std::vector<std::pair<int, double>> feasible;
        for (const auto& v : vehicles) {
            const auto& e = evals.at(v.id);
            if (e.feasible) feasible.emplace_back(v.id, e.b_min);
        }
        const int f = static_cast<int>(feasible.size());
        for (std::uint32_t mask = 0; mask < (1u << f); ++mask) {
            double bw = 0;
            int count = 0;
            for (int i = 0; i < f; ++i)
                if (mask & (1u << i)) {
                    bw += feasible[i].second;
                    ++count;
                }
            if (count == 0 || bw > radio.total_bandwidth) continue;
            Candidate cand{objective_value(params, count, r), count, r, bw};
            if (better(cand, best)) {
                best = cand;
                best_rank = r;
                best_subset.clear();
                for (int i = 0; i < f; ++i)
                    if (mask & (1u << i)) best_subset.push_back(feasible[i].first);
                best_evals = evals;
            }
        }
    }

    ScheduleDecision d;
    if (best_subset.empty()) return d;

    d.rank = best_rank;
    d.selected = best_subset;
    d.objective = best.objective;
    d.per_vehicle = std::move(best_evals);
    for (int id : d.selected) d.bandwidth_hz[id] = d.per_vehicle.at(id).b_min;
    return d;
}

ScheduleDecision random_schedule(const std::vector<Vehicle>& vehicles, double fraction,
                                 const ModelSpec& model, const RadioConfig& radio, int rank,
                                 int epochs, std::uint64_t seed) {
    if (fraction <= 0 || fraction > 1)
        throw std::invalid_argument("fraction must be in (0, 1]");
    ScheduleDecision d;
    d.rank = rank;
    d.objective = std::numeric_limits<double>::quiet_NaN();  // not an optimizer
    if (vehicles.empty()) return d;

    const int n = static_cast<int>(vehicles.size());
    const int k = std::min(n, static_cast<int>(std::ceil(fraction * n)));

    // Partial Fisher-Yates over index positions.
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        int j = std::uniform_int_distribution<int>(i, n - 1)(rng);
        std::swap(idx[i], idx[j]);
    }
    std::vector<int> chosen(idx.begin(), idx.begin() + k);
    std::sort(chosen.begin(), chosen.end(),
              [&](int a, int b) { return vehicles[a].id < vehicles[b].id; });

    const double b_each = radio.total_bandwidth / k;
    for (int i : chosen) {
        const Vehicle& v = vehicles[i];
        PerVehicleEval e;
        e.t_sojourn = sojourn_time(v, radio);
        e.t_train = local_train_delay(v, rank, model, epochs);
        e.b_min = b_each;  // assigned share, not a computed minimum
        e.t_upload = upload_delay(rank, model, uplink_rate(v, b_each, radio), radio);
        e.feasible = e.t_train + e.t_upload <= e.t_sojourn;
        d.per_vehicle.emplace(v.id, e);
        d.selected.push_back(v.id);
        d.bandwidth_hz[v.id] = b_each;
    }
    return d;
}

namespace {

// Shared even-split body for the two FedAvg baselines.
ScheduleDecision fedavg_even_split(const std::vector<Vehicle>& vehicles,
                                   const std::vector<int>& chosen_indices,
                                   const ModelSpec& model, const RadioConfig& radio,
                                   int epochs, bool unconstrained) {
    ScheduleDecision d;
    d.rank = 0;
    d.unconstrained = unconstrained;
    d.objective = std::numeric_limits<double>::quiet_NaN();
    if (chosen_indices.empty()) return d;

    const double b_each = radio.total_bandwidth / chosen_indices.size();
    for (int i : chosen_indices) {
        const Vehicle& v = vehicles[i];
        PerVehicleEval e;
        e.t_sojourn = sojourn_time(v, radio);
        e.t_train = full_train_delay(v, model, epochs);
        e.b_min = b_each;
        e.t_upload = full_upload_delay(model, uplink_rate(v, b_each, radio), radio);
        e.feasible = unconstrained || (e.t_train + e.t_upload <= e.t_sojourn);
        d.per_vehicle.emplace(v.id, e);
        d.selected.push_back(v.id);
        d.bandwidth_hz[v.id] = b_each;
    }
    return d;
}

}  // namespace

ScheduleDecision fedavg_random_schedule(const std::vector<Vehicle>& vehicles, double fraction,
                                        const ModelSpec& model, const RadioConfig& radio,
                                        int epochs, std::uint64_t seed) {
    if (fraction <= 0 || fraction > 1)
        throw std::invalid_argument("fraction must be in (0, 1]");
    if (vehicles.empty()) return fedavg_even_split(vehicles, {}, model, radio, epochs, false);

    const int n = static_cast<int>(vehicles.size());
    const int k = std::min(n, static_cast<int>(std::ceil(fraction * n)));
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        int j = std::uniform_int_distribution<int>(i, n - 1)(rng);
        std::swap(idx[i], idx[j]);
    }
    std::vector<int> chosen(idx.begin(), idx.begin() + k);
    std::sort(chosen.begin(), chosen.end(),
              [&](int a, int b) { return vehicles[a].id < vehicles[b].id; });
    return fedavg_even_split(vehicles, chosen, model, radio, epochs, false);
}

ScheduleDecision fedavg_oracle_schedule(const std::vector<Vehicle>& vehicles,
                                        const ModelSpec& model, const RadioConfig& radio,
                                        int epochs) {
    std::vector<int> all(vehicles.size());
    std::iota(all.begin(), all.end(), 0);
    std::sort(all.begin(), all.end(),
              [&](int a, int b) { return vehicles[a].id < vehicles[b].id; });
    return fedavg_even_split(vehicles, all, model, radio, epochs, true);
}

ConstraintReport validate_decision(const ScheduleDecision& d,
                                   const std::vector<Vehicle>& vehicles,
                                   const ModelSpec& model, const RadioConfig& radio,
                                   int epochs) {
    ConstraintReport rep;
    auto fail = [&](const std::string& msg) {
        rep.ok = false;
        rep.violation = msg;
        return rep;
    };

    std::map<int, const Vehicle*> by_id;
    for (const auto& v : vehicles) by_id[v.id] = &v;

    std::set<int> seen;
    for (int id : d.selected) {
        if (!by_id.count(id)) return fail("C1: selected id " + std::to_string(id) + " unknown");
        if (!seen.insert(id).second)
            return fail("C1: id " + std::to_string(id) + " selected twice");
    }
    if (seen.size() != d.selected.size()) return fail("C2: selection count mismatch");

    double total = 0;
    for (int id : d.selected) {
        auto it = d.bandwidth_hz.find(id);
        if (it == d.bandwidth_hz.end())
            return fail("C4: no bandwidth assigned to id " + std::to_string(id));
        const double b = it->second;
        if (!(b >= 0) || b > radio.total_bandwidth)
            return fail("C4: bandwidth " + std::to_string(b) + " outside [0, B] for id " +
                        std::to_string(id));
        total += b;
    }
    if (total > radio.total_bandwidth * (1 + 1e-12))
        return fail("C3: total bandwidth " + std::to_string(total) + " exceeds budget");

    if (d.unconstrained) return rep;  // oracle decisions make no C5 claim

    for (int id : d.selected) {
        auto pv = d.per_vehicle.find(id);
        const bool dropped = pv != d.per_vehicle.end() && !pv->second.feasible;
        if (dropped) continue;  // flagged straggler, excluded from aggregation
        const Vehicle& v = *by_id.at(id);
        const double t_st = sojourn_time(v, radio);
        const double rate = uplink_rate(v, d.bandwidth_hz.at(id), radio);
        // rank 0 marks a full-rank (FedAvg) decision
        const double t_l = d.rank == 0 ? full_train_delay(v, model, epochs)
                                       : local_train_delay(v, d.rank, model, epochs);
        const double t_u = d.rank == 0 ? full_upload_delay(model, rate, radio)
                                       : upload_delay(d.rank, model, rate, radio);
        if (t_l + t_u > t_st * (1 + 1e-9) + 1e-12)
            return fail("C5: id " + std::to_string(id) + " misses deadline: " +
                        std::to_string(t_l + t_u) + " > " + std::to_string(t_st));
    }
    return rep;
}

}  // namespace feddlora
