#pragma once

//
// Experiment orchestration: a flat key=value config, the round loop wiring
// scenario -> scheduler -> trainer -> aggregation, per-round metrics, and
// the CSV/JSONL output bundle.
//

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "feddlora/arbvs.hpp"
#include "feddlora/fed.hpp"
#include "feddlora/scenario.hpp"

namespace feddlora {

enum class SchedulerKind {
    Arbvs,         // joint rank/bandwidth/vehicle optimization
    Random,        // seeded fraction at a fixed LoRA rank, even bandwidth split
    FedavgRandom,  // seeded fraction, full-rank uploads, even split
    FedavgOracle,  // every vehicle, full-rank, no physical constraints
};

struct ExperimentConfig {
    // scenario
    int population = 20;
    double coverage_radius = 500.0;
    double speed_min = 12.0, speed_max = 22.0;
    double cpu_freq_min = 1.9e9, cpu_freq_max = 3.0e9;
    double cycles_min = 0.8e7, cycles_max = 1.2e7;
    double gamma_min = 1.3, gamma_max = 1.5;
    double tx_power_w = 0.6309573444801932;  // 28 dBm

    // radio
    double total_bandwidth = 1e7;
    double noise_psd = 3.981071705534969e-21;  // -174 dBm/Hz
    double pathloss_a = 128.1;
    double pathloss_b = 37.6;
    int pathloss_log_base = 10;
    int bit_width = 32;
    std::string fading = "off";  // off | rayleigh:<seed>

    // training
    double eta = 0.01;
    int epochs_per_round = 4;
    int batch_size = 32;
    int rounds = 60;

    // data
    std::string data_mode = "iid";  // iid | noniid
    int class_budget = 3;
    int num_classes = 10;
    int feature_dim = 32;
    int samples_per_icv = 300;
    int test_size = 2000;
    double class_separation = 0.5;

    // model (list of HxW layer shapes)
    std::vector<std::pair<int, int>> model_layers = {{64, 32}, {10, 64}};

    // scheduler
    std::string scheduler = "arbvs";  // arbvs | random | fedavg_random | fedavg_oracle
    double random_fraction = 0.2;
    int random_rank = 4;
    int rank_cap = 32;
    double bisection_eps = 1e-6;

    // objective / bound constants
    double beta = 1.0;
    double sigma2 = 1.0;
    double m_bound = 0.1;

    // seeds
    std::uint64_t scenario_seed = 1, data_seed = 2, train_seed = 3;

    // execution
    std::string output_dir = "out";
    int threads = 1;

    ModelSpec model_spec() const;
    SpawnPolicy spawn_policy() const;
    RadioConfig radio_config() const;
    TrainConfig train_config() const;
    SchedulerKind scheduler_kind() const;
    PartitionMode partition_mode() const;
};

// Flat, '#'-commented key=value text. Unknown keys throw ConfigError;
// omitted keys keep their defaults. write_config emits every key, so a
// config round-trips losslessly.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
void write_config(const ExperimentConfig& cfg, std::ostream& out);
void validate_config(const ExperimentConfig& cfg);  // throws ConfigError

struct RoundMetrics {
    int round = 0;  // t, 1-based
    int rank = 0;   // 0 marks full-rank (FedAvg) rounds
    int s_size = 0;
    std::vector<int> selected;  // carried in schedule.jsonl, not in metrics.csv
    double bandwidth_hz = 0;
    long long uplink_bits_round = 0;
    long long uplink_bits_cum = 0;
    double max_delay_s = 0;
    double sim_time_s = 0;
    double train_loss = 0;
    double test_loss = 0;
    double test_acc = 0;
    double objective = 0;
    std::string flags = "-";  // '-' or ';'-joined tokens (empty-round, straggler-drops=k)
};

struct ExperimentResult {
    std::vector<RoundMetrics> metrics;
    std::vector<ScheduleDecision> decisions;  // one per round
};

// Runs the full round loop. Deterministic given the config's seeds: client
// seeds derive from (train_seed, round, vehicle id) and aggregation order
// is fixed, so the output is identical at any thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// First simulated time at which test accuracy reaches the target.
std::optional<double> time_to_accuracy(const std::vector<RoundMetrics>& metrics, double target);

// Writes metrics.csv, schedule.jsonl, config.echo, and plotdata/*.csv.
void emit_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& outdir);

// Column order: t,r,s_size,bw_used_hz,uplink_bits_round,uplink_bits_cum,
// max_delay_s,sim_time_s,train_loss,test_loss,test_acc,objective,flags.
// Doubles round-trip exactly.
void write_metrics_csv(const std::vector<RoundMetrics>& metrics, std::ostream& out);
std::vector<RoundMetrics> read_metrics_csv(std::istream& in);

}  // namespace feddlora
