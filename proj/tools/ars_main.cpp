// Command-line front end: simulate / train / ingest / oracle / report.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ars/config.hpp"
#include "ars/errors.hpp"
#include "ars/ingest.hpp"
#include "ars/pso.hpp"
#include "ars/sim.hpp"

namespace {

using namespace ars;

struct CommonFlags {
    std::string config_path;
    std::string agents, days, init, population, matcher, capacity, seed, out, kernels;
    std::string unserved_solo, checkpoint, trips, save_daylogs, train_episodes;
};

void add_override_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file");
    cmd->add_option("--agents", f.agents, "agent population size");
    cmd->add_option("--days", f.days, "number of simulated days");
    cmd->add_option("--init", f.init, "altruism init: uniform|gaussian");
    cmd->add_option("--population", f.population, "population mode: fixed|birth-death");
    cmd->add_option("--matcher", f.matcher, "matcher: maddpg|pso|none");
    cmd->add_option("--capacity", f.capacity, "vehicle capacity");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--kernels", f.kernels, "kernel backend: auto|scalar|avx2");
    cmd->add_option("--unserved-solo", f.unserved_solo,
                    "count unpicked riders' solo distance (true|false)");
    cmd->add_option("--checkpoint", f.checkpoint, "pretrained policy checkpoint");
    cmd->add_option("--trips", f.trips, "grid-trips file (default: synthetic pool)");
    cmd->add_option("--save-daylogs", f.save_daylogs, "write daylogs.dat (true|false)");
    cmd->add_option("--train-episodes", f.train_episodes, "MADDPG pretraining episodes");
}

bool parse_bool(const std::string& v, const char* key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, std::string(key) + " must be true or false, got '" + v + "'");
}

SimulationConfig assemble_config(const CommonFlags& f) {
    SimulationConfig cfg = load_config(f.config_path);
    if (!f.agents.empty()) cfg.sim.agents = std::stoi(f.agents);
    if (!f.days.empty()) cfg.sim.days = std::stoi(f.days);
    if (!f.init.empty())
        cfg.sim.init = f.init == "gaussian" ? InitDistribution::gaussian
                       : f.init == "uniform"
                           ? InitDistribution::uniform
                           : throw ConfigError("sim.init", "init must be uniform|gaussian");
    if (!f.population.empty()) {
        if (f.population == "fixed") cfg.sim.population = PopulationMode::fixed;
        else if (f.population == "birth-death") cfg.sim.population = PopulationMode::birth_death;
        else throw ConfigError("sim.population", "population must be fixed|birth-death");
    }
    if (!f.matcher.empty()) {
        if (f.matcher == "none") cfg.sim.matcher = MatcherKind::none;
        else if (f.matcher == "pso") cfg.sim.matcher = MatcherKind::pso;
        else if (f.matcher == "maddpg") cfg.sim.matcher = MatcherKind::maddpg;
        else throw ConfigError("sim.matcher", "matcher must be maddpg|pso|none");
    }
    if (!f.capacity.empty()) cfg.sim.capacity = std::stoi(f.capacity);
    if (!f.seed.empty()) cfg.sim.seed = std::stoull(f.seed);
    if (!f.out.empty()) cfg.sim.out_dir = f.out;
    if (!f.kernels.empty()) cfg.sim.kernels = f.kernels;
    if (!f.unserved_solo.empty())
        cfg.sim.unserved_solo = parse_bool(f.unserved_solo, "sim.unserved_solo");
    if (!f.checkpoint.empty()) cfg.sim.checkpoint = f.checkpoint;
    if (!f.trips.empty()) cfg.sim.trips_file = f.trips;
    if (!f.save_daylogs.empty())
        cfg.sim.save_daylogs = parse_bool(f.save_daylogs, "sim.save_daylogs");
    if (!f.train_episodes.empty()) cfg.marl.train_episodes = std::stoi(f.train_episodes);
    validate(cfg);
    return cfg;
}

int cmd_simulate(const CommonFlags& flags) {
    SimulationConfig cfg = assemble_config(flags);
    Simulation sim(std::move(cfg));
    SimulationReport report = sim.run();
    write_report(report, sim.config().sim.out_dir, sim.config().sim.save_daylogs);
    std::cout << "simulate: " << sim.config().sim.days << " days, "
              << sim.config().sim.agents << " agents -> " << sim.config().sim.out_dir
              << "\n";
    std::cout << "total distance " << report.distance.distance_km << " km, detour factor "
              << report.detour.mean;
    if (report.mean_utilization) std::cout << ", utilization " << *report.mean_utilization;
    std::cout << "\n";
    return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& out_path) {
    SimulationConfig cfg = assemble_config(flags);
    cfg.sim.matcher = MatcherKind::maddpg;
    Simulation sim(std::move(cfg));
    PolicyBundle bundle = sim.train_policy();
    bundle.save(out_path);
    std::cout << "train: " << sim.config().marl.train_episodes << " episodes -> " << out_path
              << "\n";
    return 0;
}

int cmd_ingest(const std::string& input, const std::string& out,
               const std::string& config_path, const std::string& start,
               const std::string& end, const std::vector<double>& quad) {
    SimulationConfig cfg = load_config(config_path);
    GridWorld grid(cfg.grid.width, cfg.grid.height, cfg.grid.cell_km);

    StudyWindow window;
    // lower-Manhattan defaults; override with --quad
    window.quad = {LonLat{-74.020, 40.700}, LonLat{-73.968, 40.710},
                   LonLat{-73.958, 40.770}, LonLat{-74.012, 40.760}};
    if (!quad.empty()) {
        if (quad.size() != 8)
            throw InputError("--quad needs 8 numbers: lon lat for 4 vertices");
        for (int i = 0; i < 4; ++i) window.quad[i] = LonLat{quad[2 * i], quad[2 * i + 1]};
    }
    window.start = parse_timestamp(start);
    window.end = parse_timestamp(end);
    validate(window);

    const ParseResult parsed = parse_trip_records(input);
    const std::vector<RawTrip> inside = filter_window(parsed.trips, window);
    std::vector<TripSpec> specs;
    std::size_t rejected = 0;
    for (const RawTrip& t : inside) {
        if (auto spec = map_to_grid(t, window, grid)) specs.push_back(*spec);
        else ++rejected;
    }
    save_trips(out, specs);
    std::cout << "ingest: parsed " << parsed.trips.size() << " rows (skipped "
              << parsed.skipped << "), " << inside.size() << " in window, " << specs.size()
              << " mapped (" << rejected << " zero-length) -> " << out << "\n";
    return 0;
}

int cmd_oracle(int drivers, int riders, std::uint64_t seed, double alpha_r, double beta_pso) {
    GridWorld grid(15, 15, 0.28);
    RngStream rng(seed);
    DayState day;
    day.grid = &grid;
    auto random_trip = [&]() {
        while (true) {
            TripSpec t{{static_cast<int>(rng.uniform_index(15)),
                        static_cast<int>(rng.uniform_index(15))},
                       {static_cast<int>(rng.uniform_index(15)),
                        static_cast<int>(rng.uniform_index(15))}};
            if (!(t.origin == t.destination)) return t;
        }
    };
    for (int i = 0; i < drivers; ++i) day.drivers.push_back(DayDriver{i, random_trip(), 4});
    for (int i = 0; i < riders; ++i)
        day.riders.push_back(DayRider{100 + i, random_trip(), rng.uniform()});

    const Assignment best = brute_force_optimal(day, alpha_r, beta_pso);
    std::cout << "oracle: " << drivers << " drivers, " << riders << " riders, seed " << seed
              << "\n";
    for (const auto& [rider, driver] : best.rider_to_driver) {
        std::cout << "rider " << rider << " -> ";
        if (driver) std::cout << "driver " << *driver;
        else std::cout << "unassigned";
        std::cout << "\n";
    }
    std::cout << "fitness " << fitness(best, day, alpha_r, beta_pso) << "\n";
    return 0;
}

int cmd_report(const std::string& daylogs_path, const std::string& config_path,
               const std::string& out_dir) {
    SimulationConfig cfg = load_config(config_path);
    validate(cfg);
    std::ifstream in(daylogs_path);
    if (!in) throw InputError("cannot open day-log file: " + daylogs_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const MetricsLedger ledger = parse_daylogs(buf.str());
    SimulationReport report = build_report(ledger, cfg);
    report.manifest = "recomputed from " + daylogs_path + "\n";
    write_report(report, out_dir, false);
    std::cout << "report: " << ledger.days.size() << " days -> " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"altruistic ride-sharing simulation engine"};
    app.require_subcommand(1);

    CommonFlags flags;

    CLI::App* simulate = app.add_subcommand("simulate", "run a multi-day simulation");
    add_override_flags(simulate, flags);

    CLI::App* train = app.add_subcommand("train", "pretrain the MADDPG policy");
    std::string train_out = "policy.ckpt";
    add_override_flags(train, flags);
    train->add_option("--out-checkpoint", train_out, "checkpoint output path");

    CLI::App* ingest = app.add_subcommand("ingest", "trip records -> grid trips file");
    std::string ingest_in, ingest_out = "trips.dat", ingest_cfg;
    std::string win_start = "2016-01-02 09:00:00", win_end = "2016-01-02 10:00:00";
    std::vector<double> quad;
    ingest->add_option("--input", ingest_in, "trip-record CSV")->required();
    ingest->add_option("--out", ingest_out, "output trips file");
    ingest->add_option("--config", ingest_cfg, "JSON config file (grid section)");
    ingest->add_option("--window-start", win_start, "window start, YYYY-MM-DD HH:MM:SS");
    ingest->add_option("--window-end", win_end, "window end, YYYY-MM-DD HH:MM:SS");
    ingest->add_option("--quad", quad, "study quadrilateral: 8 numbers, lon lat x4");

    CLI::App* oracle = app.add_subcommand("oracle", "brute-force a small instance");
    int o_drivers = 2, o_riders = 3;
    std::uint64_t o_seed = 1;
    double o_alpha = 0.5, o_beta = 1.0;
    oracle->add_option("--drivers", o_drivers, "driver count (<= 4)");
    oracle->add_option("--riders", o_riders, "rider count (<= 6)");
    oracle->add_option("--seed", o_seed, "instance seed");
    oracle->add_option("--alpha-r", o_alpha, "reward weight");
    oracle->add_option("--beta-pso", o_beta, "altruism weight");

    CLI::App* report = app.add_subcommand("report", "recompute metrics from day logs");
    std::string rep_logs, rep_cfg, rep_out = "report_out";
    report->add_option("--daylogs", rep_logs, "daylogs.dat from a simulate run")->required();
    report->add_option("--config", rep_cfg, "JSON config file");
    report->add_option("--out", rep_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(flags);
        if (train->parsed()) return cmd_train(flags, train_out);
        if (ingest->parsed())
            return cmd_ingest(ingest_in, ingest_out, ingest_cfg, win_start, win_end, quad);
        if (oracle->parsed()) return cmd_oracle(o_drivers, o_riders, o_seed, o_alpha, o_beta);
        if (report->parsed()) return cmd_report(rep_logs, rep_cfg, rep_out);
    } catch (const ars::ConfigError& e) {
        std::cerr << "config error [" << e.key << "]: " << e.what() << "\n";
        return 2;
    } catch (const ars::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
