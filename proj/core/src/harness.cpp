#include "feddlora/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "feddlora/rng.hpp"
#include "text_util.hpp"

namespace feddlora {

namespace fs = std::filesystem;
using nlohmann::json;

ModelSpec ExperimentConfig::model_spec() const { return ModelSpec{model_layers}; }

SpawnPolicy ExperimentConfig::spawn_policy() const {
    SpawnPolicy p;
    p.target_population = population;
    p.speed_min = speed_min;
    p.speed_max = speed_max;
    p.cpu_freq_min = cpu_freq_min;
    p.cpu_freq_max = cpu_freq_max;
    p.cycles_min = cycles_min;
    p.cycles_max = cycles_max;
    p.gamma_min = gamma_min;
    p.gamma_max = gamma_max;
    p.tx_power_w = tx_power_w;
    p.dataset_size = samples_per_icv;
    return p;
}

RadioConfig ExperimentConfig::radio_config() const {
    RadioConfig r;
    r.total_bandwidth = total_bandwidth;
    r.noise_psd = noise_psd;
    r.pathloss_a = pathloss_a;
    r.pathloss_b = pathloss_b;
    r.pathloss_log_base = pathloss_log_base;
    r.coverage_radius = coverage_radius;
    r.bit_width = bit_width;
    if (fading != "off") {
        auto parts = detail::split(fading, ':');
        if (parts[0] != "rayleigh")
            throw ConfigError("fading must be 'off' or 'rayleigh:<seed>', got '" + fading + "'");
        r.fading = true;
        r.fading_seed = parts.size() > 1 ? detail::parse_int(parts[1], "fading seed") : 0;
    }
    return r;
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig t;
    t.eta = eta;
    t.epochs_per_round = epochs_per_round;
    t.batch_size = batch_size;
    t.rounds = rounds;
    t.seed = train_seed;
    return t;
}

SchedulerKind ExperimentConfig::scheduler_kind() const {
    if (scheduler == "arbvs") return SchedulerKind::Arbvs;
    if (scheduler == "random") return SchedulerKind::Random;
    if (scheduler == "fedavg_random") return SchedulerKind::FedavgRandom;
    if (scheduler == "fedavg_oracle") return SchedulerKind::FedavgOracle;
    throw ConfigError("unknown scheduler '" + scheduler + "'");
}

PartitionMode ExperimentConfig::partition_mode() const {
    if (data_mode == "iid") return PartitionMode::Iid;
    if (data_mode == "noniid") return PartitionMode::NonIid;
    throw ConfigError("unknown data_mode '" + data_mode + "'");
}

namespace {

std::vector<std::pair<int, int>> parse_layers(const std::string& s) {
    std::vector<std::pair<int, int>> dims;
    for (const auto& item : detail::split(s, ',')) {
        auto hw = detail::split(detail::trim(item), 'x');
        if (hw.size() != 2) throw ConfigError("bad layer shape '" + item + "' (want HxW)");
        dims.emplace_back(static_cast<int>(detail::parse_int(hw[0], "layer shape")),
                          static_cast<int>(detail::parse_int(hw[1], "layer shape")));
    }
    return dims;
}

std::string layers_to_string(const std::vector<std::pair<int, int>>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(dims[i].first) + "x" + std::to_string(dims[i].second);
    }
    return s;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        const std::string ctx = "config key " + key;

        auto d = [&] { return detail::parse_double(val, ctx); };
        auto i = [&] { return static_cast<int>(detail::parse_int(val, ctx)); };
        auto u = [&] { return static_cast<std::uint64_t>(detail::parse_int(val, ctx)); };

        if (key == "population") cfg.population = i();
        else if (key == "coverage_radius_m") cfg.coverage_radius = d();
        else if (key == "speed_min_mps") cfg.speed_min = d();
        else if (key == "speed_max_mps") cfg.speed_max = d();
        else if (key == "cpu_freq_min_hz") cfg.cpu_freq_min = d();
        else if (key == "cpu_freq_max_hz") cfg.cpu_freq_max = d();
        else if (key == "cycles_per_sample_min") cfg.cycles_min = d();
        else if (key == "cycles_per_sample_max") cfg.cycles_max = d();
        else if (key == "gamma_min") cfg.gamma_min = d();
        else if (key == "gamma_max") cfg.gamma_max = d();
        else if (key == "tx_power_w") cfg.tx_power_w = d();
        else if (key == "total_bandwidth_hz") cfg.total_bandwidth = d();
        else if (key == "noise_psd_w_per_hz") cfg.noise_psd = d();
        else if (key == "pathloss_a_db") cfg.pathloss_a = d();
        else if (key == "pathloss_b_db") cfg.pathloss_b = d();
        else if (key == "pathloss_log_base") cfg.pathloss_log_base = i();
        else if (key == "bit_width") cfg.bit_width = i();
        else if (key == "fading") cfg.fading = val;
        else if (key == "eta") cfg.eta = d();
        else if (key == "epochs_per_round") cfg.epochs_per_round = i();
        else if (key == "batch_size") cfg.batch_size = i();
        else if (key == "rounds") cfg.rounds = i();
        else if (key == "data_mode") cfg.data_mode = val;
        else if (key == "class_budget") cfg.class_budget = i();
        else if (key == "num_classes") cfg.num_classes = i();
        else if (key == "feature_dim") cfg.feature_dim = i();
        else if (key == "samples_per_icv") cfg.samples_per_icv = i();
        else if (key == "test_size") cfg.test_size = i();
        else if (key == "class_separation") cfg.class_separation = d();
        else if (key == "model_layers") cfg.model_layers = parse_layers(val);
        else if (key == "scheduler") cfg.scheduler = val;
        else if (key == "random_fraction") cfg.random_fraction = d();
        else if (key == "random_rank") cfg.random_rank = i();
        else if (key == "rank_cap") cfg.rank_cap = i();
        else if (key == "bisection_eps") cfg.bisection_eps = d();
        else if (key == "beta") cfg.beta = d();
        else if (key == "sigma2") cfg.sigma2 = d();
        else if (key == "m_bound") cfg.m_bound = d();
        else if (key == "scenario_seed") cfg.scenario_seed = u();
        else if (key == "data_seed") cfg.data_seed = u();
        else if (key == "train_seed") cfg.train_seed = u();
        else if (key == "output_dir") cfg.output_dir = val;
        else if (key == "threads") cfg.threads = i();
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse_config(f);
}

void write_config(const ExperimentConfig& c, std::ostream& out) {
    auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
    auto kd = [&](const std::string& k, double v) { kv(k, detail::fmt_double(v)); };
    auto ki = [&](const std::string& k, long long v) { kv(k, std::to_string(v)); };

    out << "# scenario\n";
    ki("population", c.population);
    kd("coverage_radius_m", c.coverage_radius);
    kd("speed_min_mps", c.speed_min);
    kd("speed_max_mps", c.speed_max);
    kd("cpu_freq_min_hz", c.cpu_freq_min);
    kd("cpu_freq_max_hz", c.cpu_freq_max);
    kd("cycles_per_sample_min", c.cycles_min);
    kd("cycles_per_sample_max", c.cycles_max);
    kd("gamma_min", c.gamma_min);
    kd("gamma_max", c.gamma_max);
    kd("tx_power_w", c.tx_power_w);
    out << "# radio\n";
    kd("total_bandwidth_hz", c.total_bandwidth);
    kd("noise_psd_w_per_hz", c.noise_psd);
    kd("pathloss_a_db", c.pathloss_a);
    kd("pathloss_b_db", c.pathloss_b);
    ki("pathloss_log_base", c.pathloss_log_base);
    ki("bit_width", c.bit_width);
    kv("fading", c.fading);
    out << "# training\n";
    kd("eta", c.eta);
    ki("epochs_per_round", c.epochs_per_round);
    ki("batch_size", c.batch_size);
    ki("rounds", c.rounds);
    out << "# data\n";
    kv("data_mode", c.data_mode);
    ki("class_budget", c.class_budget);
    ki("num_classes", c.num_classes);
    ki("feature_dim", c.feature_dim);
    ki("samples_per_icv", c.samples_per_icv);
    ki("test_size", c.test_size);
    kd("class_separation", c.class_separation);
    kv("model_layers", layers_to_string(c.model_layers));
    out << "# scheduler\n";
    kv("scheduler", c.scheduler);
    kd("random_fraction", c.random_fraction);
    ki("random_rank", c.random_rank);
    ki("rank_cap", c.rank_cap);
    kd("bisection_eps", c.bisection_eps);
    out << "# objective\n";
    kd("beta", c.beta);
    kd("sigma2", c.sigma2);
    kd("m_bound", c.m_bound);
    out << "# seeds\n";
    ki("scenario_seed", static_cast<long long>(c.scenario_seed));
    ki("data_seed", static_cast<long long>(c.data_seed));
    ki("train_seed", static_cast<long long>(c.train_seed));
    out << "# execution\n";
    kv("output_dir", c.output_dir);
    ki("threads", c.threads);
}

void validate_config(const ExperimentConfig& c) {
    auto need = [](bool cond, const std::string& msg) {
        if (!cond) throw ConfigError(msg);
    };
    need(c.population >= 1, "population must be >= 1");
    need(c.coverage_radius > 0, "coverage_radius_m must be > 0");
    need(c.speed_min > 0 && c.speed_min <= c.speed_max, "bad speed range");
    need(c.cpu_freq_min > 0 && c.cpu_freq_min <= c.cpu_freq_max, "bad cpu_freq range");
    need(c.cycles_min > 0 && c.cycles_min <= c.cycles_max, "bad cycles range");
    need(c.gamma_min > 0 && c.gamma_min <= c.gamma_max, "bad gamma range");
    need(c.tx_power_w > 0, "tx_power_w must be > 0");
    need(c.total_bandwidth > 0, "total_bandwidth_hz must be > 0");
    need(c.noise_psd > 0, "noise_psd_w_per_hz must be > 0");
    need(c.pathloss_log_base == 10 || c.pathloss_log_base == 2,
         "pathloss_log_base must be 10 or 2");
    need(c.bit_width >= 1, "bit_width must be >= 1");
    need(c.eta > 0, "eta must be > 0");
    need(c.epochs_per_round >= 1, "epochs_per_round must be >= 1");
    need(c.batch_size >= 1, "batch_size must be >= 1");
    need(c.rounds >= 1, "rounds must be >= 1");
    need(c.class_budget >= 1, "class_budget must be >= 1");
    need(c.num_classes >= 2, "num_classes must be >= 2");
    need(c.feature_dim >= 1, "feature_dim must be >= 1");
    need(c.samples_per_icv >= 1, "samples_per_icv must be >= 1");
    need(c.test_size >= 1, "test_size must be >= 1");
    need(c.class_separation > 0, "class_separation must be > 0");
    need(!c.model_layers.empty(), "model_layers must not be empty");
    need(c.model_layers.front().second == c.feature_dim,
         "first layer width must equal feature_dim");
    need(c.model_layers.back().first == c.num_classes,
         "last layer height must equal num_classes");
    need(c.random_fraction > 0 && c.random_fraction <= 1, "random_fraction must be in (0,1]");
    need(c.rank_cap >= 1, "rank_cap must be >= 1");
    need(c.bisection_eps > 0 && c.bisection_eps <= 1e-2, "bisection_eps must be in (0, 1e-2]");
    need(c.threads >= 1, "threads must be >= 1");
    c.scheduler_kind();
    c.partition_mode();
    if (c.scheduler_kind() == SchedulerKind::Random)
        check_rank(c.model_spec(), c.random_rank);
}

namespace {

// Index-addressed parallel map; output slots fix the result order so thread
// count cannot change anything observable.
template <class F>
void parallel_for(int n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> futures;
    const int workers = std::min(threads, n);
    for (int t = 0; t < workers; ++t)
        futures.push_back(std::async(std::launch::async, [&] {
            int i;
            while ((i = next.fetch_add(1)) < n) f(i);
        }));
    for (auto& fu : futures) fu.get();
}

std::string make_flags(bool empty_round, int drops) {
    std::vector<std::string> tokens;
    if (empty_round) tokens.push_back("empty-round");
    if (drops > 0) tokens.push_back("straggler-drops=" + std::to_string(drops));
    if (tokens.empty()) return "-";
    std::string s = tokens[0];
    for (std::size_t i = 1; i < tokens.size(); ++i) s += ";" + tokens[i];
    return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const ModelSpec spec = cfg.model_spec();
    const RadioConfig radio = cfg.radio_config();
    const SpawnPolicy policy = cfg.spawn_policy();
    const TrainConfig tc = cfg.train_config();
    const SchedulerKind kind = cfg.scheduler_kind();

    const MixtureSpec mix =
        make_mixture(cfg.num_classes, cfg.feature_dim, cfg.class_separation, cfg.data_seed);
    const Dataset pool = sample_mixture(mix, cfg.population * cfg.samples_per_icv,
                                        derive_seed(cfg.data_seed, 1));
    const Dataset test = sample_mixture(mix, cfg.test_size, derive_seed(cfg.data_seed, 2));
    const auto partitions =
        partition_dataset(pool, cfg.population, cfg.partition_mode(), cfg.class_budget,
                          cfg.samples_per_icv, derive_seed(cfg.data_seed, 3));

    GlobalModel global = make_global_model(spec, derive_seed(cfg.train_seed, 0x6d6f64));
    std::vector<Vehicle> vehicles = spawn_initial(policy, radio, cfg.scenario_seed);

    ObjectiveParams obj;
    obj.eta = cfg.eta;
    obj.beta = cfg.beta;
    obj.sigma2 = cfg.sigma2;
    obj.m = cfg.m_bound;
    obj.total_singulars = spec.total_singular_values();
    obj.layers = spec.layer_count();

    ExperimentResult result;
    double sim_time = 0;
    long long cum_bits = 0;
    double prev_duration = 0;

    for (int t = 1; t <= cfg.rounds; ++t) {
        vehicles = advance(vehicles, prev_duration, policy, radio,
                           derive_seed(cfg.scenario_seed, t));

        ScheduleDecision d;
        switch (kind) {
            case SchedulerKind::Arbvs:
                d = arbvs_schedule(vehicles, spec, radio, obj, cfg.rank_cap,
                                   cfg.epochs_per_round, cfg.bisection_eps);
                break;
            case SchedulerKind::Random:
                d = random_schedule(vehicles, cfg.random_fraction, spec, radio, cfg.random_rank,
                                    cfg.epochs_per_round, derive_seed(cfg.scenario_seed, t, 7));
                break;
            case SchedulerKind::FedavgRandom:
                d = fedavg_random_schedule(vehicles, cfg.random_fraction, spec, radio,
                                           cfg.epochs_per_round,
                                           derive_seed(cfg.scenario_seed, t, 7));
                break;
            case SchedulerKind::FedavgOracle:
                d = fedavg_oracle_schedule(vehicles, spec, radio, cfg.epochs_per_round);
                break;
        }

        const std::vector<int> train_ids = d.aggregated_ids();
        const bool full_rank = d.rank == 0;
        const int n_train = static_cast<int>(train_ids.size());

        double train_loss = std::numeric_limits<double>::quiet_NaN();
        if (n_train > 0) {
            if (full_rank) {
                std::vector<std::vector<Eigen::MatrixXd>> weights(n_train);
                std::vector<double> losses(n_train);
                parallel_for(n_train, cfg.threads, [&](int i) {
                    const int id = train_ids[i];
                    const DataPartition& part = partitions[id % cfg.population];
                    weights[i] = local_train_full(global, part, tc,
                                                  derive_seed(cfg.train_seed, t, id),
                                                  &losses[i]);
                });
                // train_ids is ascending, so this summation order is fixed
                const double alpha = 1.0 / n_train;
                for (std::size_t l = 0; l < global.layers.size(); ++l) {
                    Eigen::MatrixXd mean =
                        Eigen::MatrixXd::Zero(global.layers[l].rows(), global.layers[l].cols());
                    for (int i = 0; i < n_train; ++i) mean += alpha * weights[i][l];
                    global.layers[l] = std::move(mean);
                }
                global.round += 1;
                train_loss = 0;
                for (double l : losses) train_loss += l / n_train;
            } else {
                std::vector<ClientUpdate> updates(n_train);
                parallel_for(n_train, cfg.threads, [&](int i) {
                    const int id = train_ids[i];
                    const DataPartition& part = partitions[id % cfg.population];
                    updates[i] =
                        local_train(global, part, tc, d.rank, derive_seed(cfg.train_seed, t, id));
                    updates[i].vehicle_id = id;
                });
                global = aggregate(global, updates,
                                   std::vector<double>(n_train, 1.0 / n_train));
                train_loss = 0;
                for (const auto& u : updates) train_loss += u.local_loss / n_train;
            }
        }

        const EvalResult eval = evaluate(global, test);

        // Synchronous rounds: the server waits for the slowest selected
        // client (training + upload at its assigned bandwidth).
        double duration = 0;
        for (int id : d.selected) {
            const auto& e = d.per_vehicle.at(id);
            duration = std::max(duration, e.t_train + e.t_upload);
        }
        if (!std::isfinite(duration)) duration = 0;
        sim_time += duration;
        prev_duration = duration;

        const long long bits_per_client =
            static_cast<long long>(cfg.bit_width) *
            (full_rank ? spec.full_params()
                       : static_cast<long long>(d.rank) * spec.lora_params_per_rank());
        const long long bits_round = bits_per_client * static_cast<long long>(d.selected.size());
        cum_bits += bits_round;

        RoundMetrics m;
        m.round = t;
        m.rank = d.rank;
        m.s_size = static_cast<int>(d.selected.size());
        m.selected = d.selected;
        m.bandwidth_hz = d.total_bandwidth();
        m.uplink_bits_round = bits_round;
        m.uplink_bits_cum = cum_bits;
        m.max_delay_s = duration;
        m.sim_time_s = sim_time;
        m.train_loss = train_loss;
        m.test_loss = eval.loss;
        m.test_acc = eval.accuracy;
        m.objective = full_rank ? std::numeric_limits<double>::quiet_NaN()
                                : objective_value(obj, n_train, d.rank);
        m.flags = make_flags(n_train == 0, d.dropped_count());
        result.metrics.push_back(std::move(m));
        result.decisions.push_back(std::move(d));
    }
    return result;
}

std::optional<double> time_to_accuracy(const std::vector<RoundMetrics>& metrics,
                                       double target) {
    if (target <= 0) throw std::invalid_argument("target must be > 0");
    for (const auto& m : metrics)
        if (m.test_acc >= target) return m.sim_time_s;
    return std::nullopt;
}

void write_metrics_csv(const std::vector<RoundMetrics>& metrics, std::ostream& out) {
    out << "t,r,s_size,bw_used_hz,uplink_bits_round,uplink_bits_cum,max_delay_s,sim_time_s,"
           "train_loss,test_loss,test_acc,objective,flags\n";
    for (const auto& m : metrics) {
        out << m.round << ',' << m.rank << ',' << m.s_size << ','
            << detail::fmt_double(m.bandwidth_hz) << ',' << m.uplink_bits_round << ','
            << m.uplink_bits_cum << ',' << detail::fmt_double(m.max_delay_s) << ','
            << detail::fmt_double(m.sim_time_s) << ',' << detail::fmt_double(m.train_loss)
            << ',' << detail::fmt_double(m.test_loss) << ',' << detail::fmt_double(m.test_acc)
            << ',' << detail::fmt_double(m.objective) << ',' << m.flags << '\n';
    }
}

std::vector<RoundMetrics> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("metrics csv: empty input");
    std::vector<RoundMetrics> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto cols = detail::split(line, ',');
        const std::string ctx = "metrics line " + std::to_string(lineno);
        if (cols.size() != 13)
            throw IoError(ctx + ": expected 13 columns, got " + std::to_string(cols.size()));
        RoundMetrics m;
        m.round = static_cast<int>(detail::parse_int(cols[0], ctx));
        m.rank = static_cast<int>(detail::parse_int(cols[1], ctx));
        m.s_size = static_cast<int>(detail::parse_int(cols[2], ctx));
        m.bandwidth_hz = detail::parse_double(cols[3], ctx);
        m.uplink_bits_round = detail::parse_int(cols[4], ctx);
        m.uplink_bits_cum = detail::parse_int(cols[5], ctx);
        m.max_delay_s = detail::parse_double(cols[6], ctx);
        m.sim_time_s = detail::parse_double(cols[7], ctx);
        m.train_loss = detail::parse_double(cols[8], ctx);
        m.test_loss = detail::parse_double(cols[9], ctx);
        m.test_acc = detail::parse_double(cols[10], ctx);
        m.objective = detail::parse_double(cols[11], ctx);
        m.flags = cols[12];
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

json decision_to_json(const ScheduleDecision& d) {
    json pv = json::object();
    for (const auto& [id, e] : d.per_vehicle) {
        pv[std::to_string(id)] = {{"b_min", e.b_min},
                                  {"t_l", e.t_train},
                                  {"t_u", e.t_upload},
                                  {"T_st", e.t_sojourn},
                                  {"feasible", e.feasible}};
    }
    json bw = json::object();
    for (const auto& [id, b] : d.bandwidth_hz) bw[std::to_string(id)] = b;
    return json{{"rank", d.rank},
                {"selected", d.selected},
                {"bandwidth", bw},
                {"objective", d.objective},
                {"per_vehicle", pv}};
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw IoError("cannot open for writing: " + p.string());
    return f;
}

}  // namespace

void emit_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& outdir) {
    const fs::path root(outdir);
    std::error_code ec;
    fs::create_directories(root / "plotdata", ec);
    if (ec) throw IoError("cannot create output directory " + root.string() + ": " + ec.message());

    {
        auto f = open_out(root / "metrics.csv");
        write_metrics_csv(result.metrics, f);
    }
    {
        auto f = open_out(root / "schedule.jsonl");
        for (const auto& d : result.decisions) f << decision_to_json(d).dump() << '\n';
    }
    {
        auto f = open_out(root / "config.echo");
        write_config(cfg, f);
    }
    {
        auto f = open_out(root / "plotdata" / "accuracy_vs_round.csv");
        f << "t,test_acc\n";
        for (const auto& m : result.metrics)
            f << m.round << ',' << detail::fmt_double(m.test_acc) << '\n';
    }
    {
        auto rows = result.metrics;
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a.uplink_bits_cum < b.uplink_bits_cum;
        });
        auto f = open_out(root / "plotdata" / "cost_vs_accuracy.csv");
        f << "uplink_bits_cum,test_acc\n";
        for (const auto& m : rows)
            f << m.uplink_bits_cum << ',' << detail::fmt_double(m.test_acc) << '\n';
    }
    {
        auto f = open_out(root / "plotdata" / "time_to_target.csv");
        f << "target,sim_time_s,reached\n";
        for (int pct = 10; pct <= 90; pct += 10) {
            const double target = pct / 100.0;
            auto tta = time_to_accuracy(result.metrics, target);
            f << detail::fmt_double(target) << ','
              << (tta ? detail::fmt_double(*tta) : std::string("-")) << ','
              << (tta ? 1 : 0) << '\n';
        }
    }
}

}  // namespace feddlora
