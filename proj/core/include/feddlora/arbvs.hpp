#pragma once

//
// ARBVS: joint rank, bandwidth, and vehicle selection. For every candidate
// rank, each vehicle's minimum feasible bandwidth is found by bisection,
// vehicles are packed greedily by ascending b_min under the total budget,
// and the rank whose (|S|, r) pair minimizes the objective wins. A
// brute-force enumerator and a random-scheduling baseline sit alongside.
//

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "feddlora/lora.hpp"
#include "feddlora/scenario.hpp"

namespace feddlora {

struct PerVehicleEval {
    double b_min = std::numeric_limits<double>::infinity();  // Hz; inf when infeasible
    double t_train = 0;
    double t_upload = std::numeric_limits<double>::infinity();
    double t_sojourn = 0;
    bool feasible = false;
};

struct ScheduleDecision {
    int rank = 0;  // 0 marks a full-rank (FedAvg) decision
    std::vector<int> selected;            // in selection order
    std::map<int, double> bandwidth_hz;   // id -> assigned bandwidth
    double objective = std::numeric_limits<double>::infinity();
    std::map<int, PerVehicleEval> per_vehicle;
    bool unconstrained = false;  // oracle decisions ignore the C5 deadline

    bool empty() const { return selected.empty(); }
    double total_bandwidth() const;
    // Selected vehicles whose feasible flag is set (random scheduling marks
    // deadline violators as dropped; their uploads are wasted).
    std::vector<int> aggregated_ids() const;
    int dropped_count() const;
};

// Objective constants of the per-rank problem. The leading constant term of
// the parent bound does not affect the argmin and is excluded from
// comparisons; it is kept only for reporting.
struct ObjectiveParams {
    double eta = 0.01;
    double beta = 1.0;
    double sigma2 = 1.0;
    double m = 0.1;
    long long total_singulars = 0;  // K
    int layers = 0;                 // L
    double constant_term = 0.0;
};

// eta*beta*sigma2 / s + M^2 (K - L r); +infinity for an empty selection.
double objective_value(const ObjectiveParams& p, int s_size, int rank);

// Smallest bandwidth (bisection on [1 Hz, B], relative tolerance eps) whose
// Shannon rate meets d*r*n_lora / (T_st - t_l). Returns nullopt when the
// training delay alone exceeds the sojourn time or when even the full
// budget's rate is insufficient. The returned value always satisfies
// uplink_rate(b_min) >= required rate.
std::optional<double> min_bandwidth(const Vehicle& v, int rank, const ModelSpec& model,
                                    const RadioConfig& radio, int epochs, double eps = 1e-6);

struct GreedyResult {
    std::vector<int> selected;  // ascending b_min, ties by id
    double total_bandwidth = 0;
};

// Drops infeasible entries, sorts by (b_min, id), and takes the longest
// prefix whose bandwidth sum stays within the budget. Sorting by size makes
// the greedy prefix a maximum-cardinality feasible subset.
GreedyResult greedy_select(const std::vector<std::pair<int, std::optional<double>>>& b_mins,
                           double budget);

ScheduleDecision arbvs_schedule(const std::vector<Vehicle>& vehicles, const ModelSpec& model,
                                const RadioConfig& radio, const ObjectiveParams& params,
                                int rank_cap, int epochs, double eps = 1e-6);

// Exhaustive (rank x subset) enumeration with per-member b_min allocation.
// Validation oracle; throws GuardError above 16 vehicles.
ScheduleDecision brute_force_schedule(const std::vector<Vehicle>& vehicles,
                                      const ModelSpec& model, const RadioConfig& radio,
                                      const ObjectiveParams& params, int rank_cap, int epochs,
                                      double eps = 1e-6);

// Seeded uniform sample of ceil(fraction*|U|) vehicles at a caller-fixed
// rank, bandwidth split evenly. Vehicles that cannot meet the deadline at
// that bandwidth stay selected (their bandwidth and upload are wasted) but
// are flagged infeasible and excluded from aggregation.
ScheduleDecision random_schedule(const std::vector<Vehicle>& vehicles, double fraction,
                                 const ModelSpec& model, const RadioConfig& radio, int rank,
                                 int epochs, std::uint64_t seed);

// FedAvg baseline scheduling: full-rank training and uploads (rank = 0 in
// the decision), even bandwidth split over a seeded fraction, deadline
// violators flagged dropped exactly like random_schedule.
ScheduleDecision fedavg_random_schedule(const std::vector<Vehicle>& vehicles, double fraction,
                                        const ModelSpec& model, const RadioConfig& radio,
                                        int epochs, std::uint64_t seed);

// Reference upper bound: every offered vehicle participates at full rank
// with no physical constraints applied. Not a physical scheduler; decisions
// carry the unconstrained flag.
ScheduleDecision fedavg_oracle_schedule(const std::vector<Vehicle>& vehicles,
                                        const ModelSpec& model, const RadioConfig& radio,
                                        int epochs);

struct ConstraintReport {
    bool ok = true;
    std::string violation;  // first violated constraint, empty when ok
};

// Recomputes sojourn, delays, and rates from the vehicles themselves and
// checks C1 (binary selection / known ids), C2 (|S| consistency), C3 (sum
// b <= B), C4 (0 <= b_n <= B), and C5 (t_l + t_u <= T_st at the assigned
// bandwidth) for every selected vehicle not marked dropped. Nothing from
// the scheduler's cached per-vehicle numbers is trusted.
ConstraintReport validate_decision(const ScheduleDecision& d,
                                   const std::vector<Vehicle>& vehicles,
                                   const ModelSpec& model, const RadioConfig& radio,
                                   int epochs);

}  // namespace feddlora
