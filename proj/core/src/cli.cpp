#include "feddlora/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "feddlora/arbvs.hpp"
#include "feddlora/gap.hpp"
#include "feddlora/harness.hpp"
#include "feddlora/rng.hpp"
#include "text_util.hpp"

namespace feddlora {

namespace {

using nlohmann::json;

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        for (const auto& cell : detail::split(line, ','))
            row.push_back(detail::parse_double(cell, path + " line " + std::to_string(lineno)));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError(path + ": no data");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

std::vector<std::pair<int, int>> parse_layers_arg(const std::string& s) {
    std::vector<std::pair<int, int>> dims;
    for (const auto& item : detail::split(s, ',')) {
        auto hw = detail::split(detail::trim(item), 'x');
        if (hw.size() != 2) throw ConfigError("bad layer shape '" + item + "' (want HxW)");
        dims.emplace_back(static_cast<int>(detail::parse_int(hw[0], "layers")),
                          static_cast<int>(detail::parse_int(hw[1], "layers")));
    }
    return dims;
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << text;
}

json decision_json(const ScheduleDecision& d) {
    json pv = json::object();
    for (const auto& [id, e] : d.per_vehicle)
        pv[std::to_string(id)] = {{"b_min", e.b_min},
                                  {"t_l", e.t_train},
                                  {"t_u", e.t_upload},
                                  {"T_st", e.t_sojourn},
                                  {"feasible", e.feasible}};
    json bw = json::object();
    for (const auto& [id, b] : d.bandwidth_hz) bw[std::to_string(id)] = b;
    return json{{"rank", d.rank},
                {"selected", d.selected},
                {"bandwidth", bw},
                {"objective", d.objective},
                {"per_vehicle", pv}};
}

void print_decision_table(const ScheduleDecision& d, const std::vector<Vehicle>& vehicles,
                          std::ostream& out) {
    out << "rank " << d.rank << ", selected " << d.selected.size() << "/" << vehicles.size()
        << ", bandwidth " << detail::fmt_double(d.total_bandwidth()) << " Hz, objective "
        << detail::fmt_double(d.objective) << "\n";
    out << std::setw(6) << "id" << std::setw(16) << "b_min_hz" << std::setw(12) << "t_l_s"
        << std::setw(12) << "t_u_s" << std::setw(12) << "T_st_s" << std::setw(10) << "feasible"
        << std::setw(10) << "selected" << "\n";
    for (const auto& v : vehicles) {
        auto it = d.per_vehicle.find(v.id);
        const bool sel =
            std::find(d.selected.begin(), d.selected.end(), v.id) != d.selected.end();
        out << std::setw(6) << v.id;
        if (it != d.per_vehicle.end()) {
            const auto& e = it->second;
            out << std::setw(16) << std::setprecision(6) << e.b_min << std::setw(12)
                << e.t_train << std::setw(12) << e.t_upload << std::setw(12) << e.t_sojourn
                << std::setw(10) << (e.feasible ? "yes" : "no");
        } else {
            out << std::setw(16) << "-" << std::setw(12) << "-" << std::setw(12) << "-"
                << std::setw(12) << "-" << std::setw(10) << "-";
        }
        out << std::setw(10) << (sel ? "yes" : "no") << "\n";
    }
}

struct SimulateArgs {
    std::string config;
    std::string out;
    std::int64_t seed = -1;
    int threads = 0;
};

int run_simulate(const SimulateArgs& args) {
    ExperimentConfig cfg;
    try {
        cfg = parse_config_file(args.config);
        if (!args.out.empty()) cfg.output_dir = args.out;
        if (args.seed >= 0) {
            const auto s = static_cast<std::uint64_t>(args.seed);
            cfg.scenario_seed = derive_seed(s, 101);
            cfg.data_seed = derive_seed(s, 102);
            cfg.train_seed = derive_seed(s, 103);
        }
        if (args.threads > 0) cfg.threads = args.threads;
        validate_config(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    auto result = run_experiment(cfg);
    emit_outputs(result, cfg, cfg.output_dir);
    std::cout << "wrote " << result.metrics.size() << " rounds to " << cfg.output_dir << "\n";
    return 0;
}

struct ScheduleArgs {
    std::string snapshot;
    int rank_cap = 32;
    double bandwidth = 0;  // 0 keeps the default budget
    int epochs = 4;
    std::string layers = "64x32,10x64";
    double eta = 0.01, beta = 1.0, sigma2 = 1.0, m = 0.1, eps = 1e-6;
    std::string out = "-";
};

int run_schedule(const ScheduleArgs& args) {
    std::vector<Vehicle> vehicles;
    ModelSpec spec;
    RadioConfig radio;
    ObjectiveParams params;
    try {
        vehicles = read_snapshot_csv(args.snapshot);
        spec.layer_dims = parse_layers_arg(args.layers);
        spec.validate();
        if (args.bandwidth > 0) radio.total_bandwidth = args.bandwidth;
        params.eta = args.eta;
        params.beta = args.beta;
        params.sigma2 = args.sigma2;
        params.m = args.m;
        params.total_singulars = spec.total_singular_values();
        params.layers = spec.layer_count();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    auto d = arbvs_schedule(vehicles, spec, radio, params, args.rank_cap, args.epochs, args.eps);
    print_decision_table(d, vehicles, std::cerr);
    write_text(args.out, decision_json(d).dump(2) + "\n");
    return 0;
}

struct GapArgs {
    std::string matrix;
    int rank = 0;
    double m = 0.1;
    std::string format = "json";
    std::string out = "-";
};

int run_gap(const GapArgs& args) {
    Eigen::MatrixXd g;
    try {
        g = read_matrix_csv(args.matrix);
        if (args.format != "json" && args.format != "csv")
            throw ConfigError("format must be json or csv");
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    GapReport rep;
    try {
        rep = gap_report({g}, args.rank, args.m);
    } catch (const InvalidRankError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (args.format == "json") {
        json layers = json::array();
        for (const auto& l : rep.layers) {
            std::vector<double> sv(l.singular_values.data(),
                                   l.singular_values.data() + l.singular_values.size());
            layers.push_back({{"singular_values", sv},
                              {"residual_norm", l.residual_norm},
                              {"bound", l.bound},
                              {"ok", l.ok},
                              {"assumption_holds", l.assumption_holds}});
        }
        json j{{"rank", rep.rank},
               {"m", rep.m},
               {"layers", layers},
               {"total_residual_norm", rep.total_residual_norm},
               {"total_bound", rep.total_bound},
               {"bound_satisfied", rep.bound_satisfied}};
        write_text(args.out, j.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        csv << "layer,k,rank,residual_norm,bound,ok,assumption_holds,singular_values\n";
        for (std::size_t i = 0; i < rep.layers.size(); ++i) {
            const auto& l = rep.layers[i];
            csv << i << ',' << l.singular_values.size() << ',' << rep.rank << ','
                << detail::fmt_double(l.residual_norm) << ',' << detail::fmt_double(l.bound)
                << ',' << (l.ok ? 1 : 0) << ',' << (l.assumption_holds ? 1 : 0) << ',';
            for (Eigen::Index j = 0; j < l.singular_values.size(); ++j) {
                if (j) csv << ';';
                csv << detail::fmt_double(l.singular_values[j]);
            }
            csv << '\n';
        }
        csv << "total,,," << detail::fmt_double(rep.total_residual_norm) << ','
            << detail::fmt_double(rep.total_bound) << ',' << (rep.bound_satisfied ? 1 : 0)
            << ",,\n";
        write_text(args.out, csv.str());
    }
    return 0;
}

struct BoundArgs {
    std::string config;
    double loss_init = -1;  // < 0 means "use ln(num_classes)"
    double loss_star = 0;
    std::string out = "-";
};

int run_bound(const BoundArgs& args) {
    ExperimentConfig cfg;
    int max_rank = 0;
    try {
        cfg = parse_config_file(args.config);
        validate_config(cfg);
        max_rank = rank_upper_bound(cfg.model_spec(), cfg.rank_cap);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    const ModelSpec spec = cfg.model_spec();
    BoundParams p;
    p.eta = cfg.eta;
    p.beta = cfg.beta;
    p.sigma2 = cfg.sigma2;
    p.m = cfg.m_bound;
    p.total_singulars = spec.total_singular_values();
    p.layers = spec.layer_count();
    p.loss_init = args.loss_init >= 0 ? args.loss_init : std::log(cfg.num_classes);
    p.loss_star = args.loss_star;
    p.rounds = cfg.rounds;

    std::ostringstream csv;
    csv << "r,s_size,avg_grad_bound\n";
    for (int r = 1; r <= max_rank; ++r)
        for (int s = 1; s <= cfg.population; ++s)
            csv << r << ',' << s << ',' << detail::fmt_double(avg_grad_bound(p, s, r)) << '\n';
    write_text(args.out, csv.str());
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Fed-DLoRA: federated learning with dynamic low-rank adaptation "
                 "over a single-base-station vehicular network"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Run a federated experiment from a config file");
    sim->add_option("--config", sim_args.config, "Flat key=value config file")->required();
    sim->add_option("--out", sim_args.out, "Override the config's output directory");
    sim->add_option("--seed", sim_args.seed, "Override all seeds from one master seed");
    sim->add_option("--threads", sim_args.threads, "Override worker thread count");

    ScheduleArgs sch_args;
    auto* sch = app.add_subcommand("schedule", "One-shot ARBVS on a scenario snapshot CSV");
    sch->add_option("--snapshot", sch_args.snapshot, "Scenario snapshot CSV")->required();
    sch->add_option("--rank-cap", sch_args.rank_cap, "Rank enumeration cap");
    sch->add_option("--bandwidth", sch_args.bandwidth, "Total bandwidth budget in Hz");
    sch->add_option("--epochs", sch_args.epochs, "Local epochs per round");
    sch->add_option("--layers", sch_args.layers, "Model layer shapes, e.g. 64x32,10x64");
    sch->add_option("--eta", sch_args.eta, "Learning rate (objective constant)");
    sch->add_option("--beta", sch_args.beta, "Smoothness constant");
    sch->add_option("--sigma2", sch_args.sigma2, "Gradient variance bound");
    sch->add_option("--M", sch_args.m, "Singular value bound");
    sch->add_option("--eps", sch_args.eps, "Bisection relative tolerance");
    sch->add_option("--out", sch_args.out, "JSON output path ('-' for stdout)");

    GapArgs gap_args;
    auto* gap = app.add_subcommand("gap", "Truncated-SVD gap report for a matrix CSV");
    gap->add_option("--matrix", gap_args.matrix, "Dense matrix CSV")->required();
    gap->add_option("--rank", gap_args.rank, "Retained rank")->required();
    gap->add_option("--M", gap_args.m, "Singular value bound");
    gap->add_option("--format", gap_args.format, "json or csv");
    gap->add_option("--out", gap_args.out, "Output path ('-' for stdout)");

    BoundArgs bnd_args;
    auto* bnd = app.add_subcommand("bound", "Average-gradient bound curves over r and |S|");
    bnd->add_option("--config", bnd_args.config, "Config file providing the constants")
        ->required();
    bnd->add_option("--loss-init", bnd_args.loss_init, "Initial loss estimate");
    bnd->add_option("--loss-star", bnd_args.loss_star, "Optimal loss estimate");
    bnd->add_option("--out", bnd_args.out, "Output path ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return run_simulate(sim_args);
        if (sch->parsed()) return run_schedule(sch_args);
        if (gap->parsed()) return run_gap(gap_args);
        if (bnd->parsed()) return run_bound(bnd_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace feddlora
