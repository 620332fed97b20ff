#include "feddlora/scenario.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "feddlora/rng.hpp"
#include "text_util.hpp"

namespace feddlora {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

double sojourn_time(const Vehicle& v, const RadioConfig& radio) {
    if (v.speed <= 0) return kInf;
    const double r = radio.coverage_radius;
    const double pu = v.position.dot(v.heading);
    const double disc = pu * pu + r * r - v.position.squaredNorm();
    const double exit_dist = -pu + std::sqrt(std::max(disc, 0.0));
    return std::max(exit_dist, 0.0) / v.speed;
}

double channel_gain(const Vehicle& v, const RadioConfig& radio) {
    const double dist_m = std::max(v.position.norm(), 1.0);  // 1 m floor
    const double dist_km = dist_m / 1000.0;
    const double log_val =
        radio.pathloss_log_base == 2 ? std::log2(dist_km) : std::log10(dist_km);
    const double pl_db = radio.pathloss_a + radio.pathloss_b * log_val;
    double gain = std::pow(10.0, -pl_db / 10.0);
    if (radio.fading) {
        // Block fading: the draw is a pure function of (seed, id, position),
        // so the gain is constant within a scheduling snapshot.
        const std::uint64_t px = std::bit_cast<std::uint64_t>(v.position.x());
        const std::uint64_t py = std::bit_cast<std::uint64_t>(v.position.y());
        Rng rng(derive_seed(radio.fading_seed, static_cast<std::uint64_t>(v.id),
                            px ^ (py << 1 | py >> 63)));
        const double u = uniform(rng, 0.0, 1.0);
        gain *= -std::log1p(-u);  // |CN(0,1)|^2 is Exp(1)
    }
    return gain;
}

double uplink_rate(const Vehicle& v, double bandwidth_hz, const RadioConfig& radio) {
    if (bandwidth_hz <= 0) return 0.0;
    const double snr = v.tx_power * channel_gain(v, radio) / (bandwidth_hz * radio.noise_psd);
    return bandwidth_hz * std::log2(1.0 + snr);
}

double local_train_delay(const Vehicle& v, int rank, const ModelSpec& model, int epochs) {
    if (rank < 1) throw InvalidRankError("rank must be >= 1");
    const double lora_params = static_cast<double>(rank) * model.lora_params_per_rank();
    return v.gamma * epochs * v.dataset_size * v.cycles_per_sample * lora_params /
           (v.cpu_freq * static_cast<double>(model.full_params()));
}

double full_train_delay(const Vehicle& v, const ModelSpec& model, int epochs) {
    (void)model;
    return v.gamma * epochs * v.dataset_size * v.cycles_per_sample / v.cpu_freq;
}

double upload_delay(int rank, const ModelSpec& model, double rate_bps, const RadioConfig& radio) {
    if (rate_bps <= 0) return kInf;
    const double bits =
        static_cast<double>(radio.bit_width) * rank * model.lora_params_per_rank();
    return bits / rate_bps;
}

double full_upload_delay(const ModelSpec& model, double rate_bps, const RadioConfig& radio) {
    if (rate_bps <= 0) return kInf;
    const double bits = static_cast<double>(radio.bit_width) * model.full_params();
    return bits / rate_bps;
}

namespace {

// Draw order is fixed (speed, cpu, cycles, gamma) so snapshots are stable.
void sample_profile(Vehicle& v, const SpawnPolicy& p, Rng& rng) {
    v.speed = uniform(rng, p.speed_min, p.speed_max);
    v.cpu_freq = uniform(rng, p.cpu_freq_min, p.cpu_freq_max);
    v.cycles_per_sample = uniform(rng, p.cycles_min, p.cycles_max);
    v.gamma = uniform(rng, p.gamma_min, p.gamma_max);
    v.tx_power = p.tx_power_w;
    v.dataset_size = p.dataset_size;
}

Vehicle spawn_at_boundary(int id, const SpawnPolicy& policy, const RadioConfig& radio,
                          Rng& rng) {
    Vehicle v;
    v.id = id;
    const double theta = uniform(rng, 0.0, 2.0 * M_PI);
    // Fractionally inside the boundary so ||position|| <= R holds exactly.
    const double rad = radio.coverage_radius * (1.0 - 1e-12);
    v.position = {rad * std::cos(theta), rad * std::sin(theta)};
    // Heading within ~69 degrees of the inward normal: always moving inward.
    const double phi = uniform(rng, -1.2, 1.2);
    const Eigen::Vector2d inward = -v.position.normalized();
    v.heading = {inward.x() * std::cos(phi) - inward.y() * std::sin(phi),
                 inward.x() * std::sin(phi) + inward.y() * std::cos(phi)};
    sample_profile(v, policy, rng);
    return v;
}

}  // namespace

std::vector<Vehicle> spawn_initial(const SpawnPolicy& policy, const RadioConfig& radio,
                                   std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vehicle> vehicles;
    vehicles.reserve(policy.target_population);
    for (int i = 0; i < policy.target_population; ++i) {
        Vehicle v;
        v.id = i;
        const double rad = radio.coverage_radius * std::sqrt(uniform(rng, 0.0, 1.0));
        const double theta = uniform(rng, 0.0, 2.0 * M_PI);
        v.position = {rad * std::cos(theta), rad * std::sin(theta)};
        const double dir = uniform(rng, 0.0, 2.0 * M_PI);
        v.heading = {std::cos(dir), std::sin(dir)};
        sample_profile(v, policy, rng);
        vehicles.push_back(v);
    }
    return vehicles;
}

std::vector<Vehicle> advance(const std::vector<Vehicle>& vehicles, double dt,
                             const SpawnPolicy& policy, const RadioConfig& radio,
                             std::uint64_t seed) {
    if (dt < 0) throw std::invalid_argument("advance: dt must be >= 0");
    if (dt == 0) return vehicles;

    std::vector<Vehicle> out;
    out.reserve(policy.target_population);
    int next_id = 0;
    for (const auto& v : vehicles) next_id = std::max(next_id, v.id + 1);

    for (Vehicle v : vehicles) {
        v.position += v.heading * (v.speed * dt);
        if (v.position.norm() <= radio.coverage_radius) out.push_back(v);
    }

    Rng rng(seed);
    while (static_cast<int>(out.size()) < policy.target_population)
        out.push_back(spawn_at_boundary(next_id++, policy, radio, rng));
    return out;
}

void write_snapshot_csv(const std::vector<Vehicle>& vehicles, std::ostream& out) {
    out << "id,x,y,heading_x,heading_y,v,f,w_bar,gamma,P,D\n";
    for (const auto& v : vehicles) {
        out << v.id << ',' << detail::fmt_double(v.position.x()) << ','
            << detail::fmt_double(v.position.y()) << ',' << detail::fmt_double(v.heading.x())
            << ',' << detail::fmt_double(v.heading.y()) << ',' << detail::fmt_double(v.speed)
            << ',' << detail::fmt_double(v.cpu_freq) << ','
            << detail::fmt_double(v.cycles_per_sample) << ',' << detail::fmt_double(v.gamma)
            << ',' << detail::fmt_double(v.tx_power) << ',' << v.dataset_size << '\n';
    }
}

void write_snapshot_csv(const std::vector<Vehicle>& vehicles, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open snapshot file for writing: " + path);
    write_snapshot_csv(vehicles, f);
}

std::vector<Vehicle> read_snapshot_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("snapshot: empty input");
    if (detail::trim(line) != "id,x,y,heading_x,heading_y,v,f,w_bar,gamma,P,D")
        throw IoError("snapshot: unexpected header '" + detail::trim(line) + "'");
    std::vector<Vehicle> vehicles;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto cols = detail::split(line, ',');
        const std::string ctx = "snapshot line " + std::to_string(lineno);
        if (cols.size() != 11) throw IoError(ctx + ": expected 11 columns, got " +
                                             std::to_string(cols.size()));
        Vehicle v;
        v.id = static_cast<int>(detail::parse_int(cols[0], ctx));
        v.position = {detail::parse_double(cols[1], ctx), detail::parse_double(cols[2], ctx)};
        v.heading = {detail::parse_double(cols[3], ctx), detail::parse_double(cols[4], ctx)};
        v.speed = detail::parse_double(cols[5], ctx);
        v.cpu_freq = detail::parse_double(cols[6], ctx);
        v.cycles_per_sample = detail::parse_double(cols[7], ctx);
        v.gamma = detail::parse_double(cols[8], ctx);
        v.tx_power = detail::parse_double(cols[9], ctx);
        v.dataset_size = static_cast<int>(detail::parse_int(cols[10], ctx));
        vehicles.push_back(v);
    }
    return vehicles;
}

std::vector<Vehicle> read_snapshot_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open snapshot file: " + path);
    return read_snapshot_csv(f);
}

}  // namespace feddlora
