#pragma once

//
// Single-base-station vehicular environment. The base station sits at the
// origin with coverage radius R; vehicles travel on straight lines inside
// the disk. Sojourn time, path-loss channel, FDMA Shannon rate, and the
// training/upload delay models live here.
//

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feddlora/errors.hpp"
#include "feddlora/lora.hpp"

namespace feddlora {

struct Vehicle {
    int id = 0;
    Eigen::Vector2d position{0, 0};  // meters, base station at origin
    Eigen::Vector2d heading{1, 0};   // unit vector
    double speed = 0;                // m/s
    double cpu_freq = 0;             // Hz
    double cycles_per_sample = 0;    // CPU cycles per training sample
    double gamma = 1.0;              // frozen-base compensation factor
    double tx_power = 0;             // watts
    int dataset_size = 0;            // samples
};

struct RadioConfig {
    double total_bandwidth = 1e7;      // B, Hz
    double noise_psd = 3.981071705534969e-21;  // N0, W/Hz (-174 dBm/Hz)
    double pathloss_a = 128.1;         // dB at 1 km
    double pathloss_b = 37.6;          // dB per decade
    int pathloss_log_base = 10;        // 10 (3GPP coefficients) or 2 (as printed)
    double coverage_radius = 500.0;    // m
    int bit_width = 32;                // d, bits per parameter
    bool fading = false;               // Rayleigh block fading, off by default
    std::uint64_t fading_seed = 0;
};

// Time until the vehicle exits coverage along its heading: L_n / v_n, where
// L_n is the positive ray-circle intersection distance. Zero speed returns
// +infinity (unconstrained).
double sojourn_time(const Vehicle& v, const RadioConfig& radio);

// Path loss a + b*log(X_km), X clamped to a 1 m floor, returned as a linear
// power gain 10^(-PL/10). With fading on, multiplied by a Rayleigh-squared
// factor derived from (fading_seed, vehicle id, position) so a snapshot
// evaluates the same gain every time (block fading within a round).
double channel_gain(const Vehicle& v, const RadioConfig& radio);

// Shannon rate under FDMA: C = b * log2(1 + P h / (b N0)), bits/s.
double uplink_rate(const Vehicle& v, double bandwidth_hz, const RadioConfig& radio);

// t_l = gamma * E * D_n * cycles * (r * n_lora_per_rank) / (f_n * N).
double local_train_delay(const Vehicle& v, int rank, const ModelSpec& model, int epochs);

// Full-rank variant used by the FedAvg baseline: the r*n_lora/N factor is 1.
double full_train_delay(const Vehicle& v, const ModelSpec& model, int epochs);

// t_u = d * r * n_lora_per_rank / C; +infinity when the rate is <= 0.
double upload_delay(int rank, const ModelSpec& model, double rate_bps, const RadioConfig& radio);

double full_upload_delay(const ModelSpec& model, double rate_bps, const RadioConfig& radio);

// Per-vehicle sampling ranges for spawning. Defaults follow the reference
// C-V2X setup (speeds 12-22 m/s, 0.8-1.2e7 cycles/sample, 1.9-3 GHz CPUs,
// gamma in [1.3, 1.5], 28 dBm transmit power).
struct SpawnPolicy {
    int target_population = 20;
    double speed_min = 12.0, speed_max = 22.0;
    double cpu_freq_min = 1.9e9, cpu_freq_max = 3.0e9;
    double cycles_min = 0.8e7, cycles_max = 1.2e7;
    double gamma_min = 1.3, gamma_max = 1.5;
    double tx_power_w = 0.6309573444801932;  // 28 dBm
    int dataset_size = 300;
};

// Initial population: uniform positions in the disk, uniform headings,
// per-vehicle parameters sampled once and fixed for the vehicle's lifetime.
std::vector<Vehicle> spawn_initial(const SpawnPolicy& policy, const RadioConfig& radio,
                                   std::uint64_t seed);

// Moves every vehicle by heading*speed*dt, removes those that left the disk,
// then spawns fresh vehicles at the boundary moving inward until the
// population is back at the target. dt = 0 returns the input unchanged.
std::vector<Vehicle> advance(const std::vector<Vehicle>& vehicles, double dt,
                             const SpawnPolicy& policy, const RadioConfig& radio,
                             std::uint64_t seed);

// Snapshot CSV: header id,x,y,heading_x,heading_y,v,f,w_bar,gamma,P,D with
// units meters, m/s, Hz, cycles, watts, samples.
void write_snapshot_csv(const std::vector<Vehicle>& vehicles, std::ostream& out);
void write_snapshot_csv(const std::vector<Vehicle>& vehicles, const std::string& path);
std::vector<Vehicle> read_snapshot_csv(std::istream& in);
std::vector<Vehicle> read_snapshot_csv(const std::string& path);

}  // namespace feddlora
