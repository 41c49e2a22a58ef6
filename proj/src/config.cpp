#include "ars/config.hpp"
#include "ars/errors.hpp"
#include "ars/rng.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

extern char** environ;

namespace ars {

using nlohmann::json;

namespace {

InitDistribution parse_init(const std::string& s) {
    if (s == "uniform") return InitDistribution::uniform;
    if (s == "gaussian") return InitDistribution::gaussian;
    throw ConfigError("sim.init", "init must be 'uniform' or 'gaussian', got '" + s + "'");
}

PopulationMode parse_population_mode(const std::string& s) {
    if (s == "fixed") return PopulationMode::fixed;
    if (s == "birth-death") return PopulationMode::birth_death;
    throw ConfigError("sim.population", "population must be 'fixed' or 'birth-death', got '" + s + "'");
}

MatcherKind parse_matcher(const std::string& s) {
    if (s == "none") return MatcherKind::none;
    if (s == "pso") return MatcherKind::pso;
    if (s == "maddpg") return MatcherKind::maddpg;
    throw ConfigError("sim.matcher", "matcher must be 'none', 'pso' or 'maddpg', got '" + s + "'");
}

template <typename T>
void read(const json& j, const char* section, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(section) + "." + key,
                          "wrong type for key '" + std::string(section) + "." + key + "'");
    }
}

void apply_json(SimulationConfig& cfg, const json& root) {
    if (root.contains("sim")) {
        const json& j = root.at("sim");
        read(j, "sim", "agents", cfg.sim.agents);
        read(j, "sim", "days", cfg.sim.days);
        if (j.contains("init")) cfg.sim.init = parse_init(j.at("init").get<std::string>());
        if (j.contains("population"))
            cfg.sim.population = parse_population_mode(j.at("population").get<std::string>());
        if (j.contains("matcher"))
            cfg.sim.matcher = parse_matcher(j.at("matcher").get<std::string>());
        read(j, "sim", "capacity", cfg.sim.capacity);
        read(j, "sim", "seed", cfg.sim.seed);
        read(j, "sim", "out", cfg.sim.out_dir);
        read(j, "sim", "unserved_solo", cfg.sim.unserved_solo);
        read(j, "sim", "tick_cap_mult", cfg.sim.tick_cap_mult);
        read(j, "sim", "checkpoint", cfg.sim.checkpoint);
        read(j, "sim", "trips_file", cfg.sim.trips_file);
        read(j, "sim", "trip_pool", cfg.sim.trip_pool);
        read(j, "sim", "sample_bins", cfg.sim.sample_bins);
        read(j, "sim", "gaussian_mean", cfg.sim.gaussian_mean);
        read(j, "sim", "gaussian_sd", cfg.sim.gaussian_sd);
        read(j, "sim", "kernels", cfg.sim.kernels);
        read(j, "sim", "save_daylogs", cfg.sim.save_daylogs);
    }
    if (root.contains("grid")) {
        const json& j = root.at("grid");
        read(j, "grid", "width", cfg.grid.width);
        read(j, "grid", "height", cfg.grid.height);
        read(j, "grid", "cell_km", cfg.grid.cell_km);
        read(j, "grid", "distance_matrix", cfg.grid.distance_matrix);
    }
    if (root.contains("economy")) {
        const json& j = root.at("economy");
        read(j, "economy", "alpha_s", cfg.economy.alpha_s);
        read(j, "economy", "beta_s", cfg.economy.beta_s);
    }
    if (root.contains("population")) {
        const json& j = root.at("population");
        read(j, "population", "alpha_bd", cfg.population.alpha_bd);
        read(j, "population", "beta_bd", cfg.population.beta_bd);
        read(j, "population", "gamma_bd", cfg.population.gamma_bd);
        read(j, "population", "delta_bd", cfg.population.delta_bd);
        read(j, "population", "s_th", cfg.population.s_th);
        read(j, "population", "p_base", cfg.population.p_base);
        read(j, "population", "phase_early_end", cfg.population.phase_early_end);
        read(j, "population", "phase_laggard_start", cfg.population.phase_laggard_start);
        read(j, "population", "share_early", cfg.population.share_early);
        read(j, "population", "share_majority", cfg.population.share_majority);
        read(j, "population", "share_laggard", cfg.population.share_laggard);
        read(j, "population", "urgency_lo", cfg.population.urgency_lo);
        read(j, "population", "urgency_hi", cfg.population.urgency_hi);
        read(j, "population", "urgency_horizon_days", cfg.population.urgency_horizon_days);
        read(j, "population", "network_low", cfg.population.network_low);
        read(j, "population", "network_mid", cfg.population.network_mid);
        read(j, "population", "network_high", cfg.population.network_high);
        read(j, "population", "initial_active_fraction", cfg.population.initial_active_fraction);
        read(j, "population", "init_base_early", cfg.population.init_base_early);
        read(j, "population", "init_base_majority", cfg.population.init_base_majority);
        read(j, "population", "init_base_laggard", cfg.population.init_base_laggard);
        read(j, "population", "init_adjust_scale", cfg.population.init_adjust_scale);
        read(j, "population", "init_jitter", cfg.population.init_jitter);
    }
    if (root.contains("marl")) {
        const json& j = root.at("marl");
        read(j, "marl", "rider_slots", cfg.marl.rider_slots);
        read(j, "marl", "joint_agents", cfg.marl.joint_agents);
        read(j, "marl", "pickup_radius_cells", cfg.marl.pickup_radius_cells);
        read(j, "marl", "alpha_r", cfg.marl.alpha_r);
        read(j, "marl", "reward_raw_km", cfg.marl.reward_raw_km);
        read(j, "marl", "actor_lr", cfg.marl.actor_lr);
        read(j, "marl", "critic_lr", cfg.marl.critic_lr);
        read(j, "marl", "gamma", cfg.marl.gamma);
        read(j, "marl", "tau", cfg.marl.tau);
        read(j, "marl", "batch", cfg.marl.batch);
        read(j, "marl", "buffer", cfg.marl.buffer);
        read(j, "marl", "priority_exponent", cfg.marl.priority_exponent);
        read(j, "marl", "explore_start", cfg.marl.explore_start);
        read(j, "marl", "explore_end", cfg.marl.explore_end);
        read(j, "marl", "train_episodes", cfg.marl.train_episodes);
        read(j, "marl", "steps_per_episode", cfg.marl.steps_per_episode);
        read(j, "marl", "actor_hidden", cfg.marl.actor_hidden);
        read(j, "marl", "critic_hidden", cfg.marl.critic_hidden);
        read(j, "marl", "per_agent_nets", cfg.marl.per_agent_nets);
    }
    if (root.contains("pso")) {
        const json& j = root.at("pso");
        read(j, "pso", "swarm", cfg.pso.swarm);
        read(j, "pso", "iterations", cfg.pso.iterations);
        read(j, "pso", "inertia", cfg.pso.inertia);
        read(j, "pso", "cognitive", cfg.pso.cognitive);
        read(j, "pso", "social", cfg.pso.social);
        read(j, "pso", "alpha_r", cfg.pso.alpha_r);
        read(j, "pso", "beta_pso", cfg.pso.beta_pso);
    }
    if (root.contains("metrics")) {
        const json& j = root.at("metrics");
        read(j, "metrics", "emission_kg_per_km", cfg.metrics.emission_kg_per_km);
        read(j, "metrics", "density_threshold", cfg.metrics.density_threshold);
        read(j, "metrics", "lorenz_grid", cfg.metrics.lorenz_grid);
        read(j, "metrics", "reint_alpha", cfg.metrics.reintegration.alpha);
        read(j, "metrics", "reint_beta", cfg.metrics.reintegration.beta);
        read(j, "metrics", "reint_gamma", cfg.metrics.reintegration.gamma);
        read(j, "metrics", "reint_delta", cfg.metrics.reintegration.delta);
        read(j, "metrics", "lambda", cfg.metrics.reintegration.lambda);
        read(j, "metrics", "tau_days", cfg.metrics.reintegration.tau_days);
    }
}

// ARS_SECTION_KEY=value overrides; values parse as JSON scalars when possible.
void apply_env(SimulationConfig& cfg) {
    static const char* sections[] = {"sim", "grid", "economy", "population",
                                     "marl", "pso", "metrics"};
    json root = json::object();
    for (char** e = environ; *e; ++e) {
        std::string entry(*e);
        if (entry.rfind("ARS_", 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(4, eq - 4);
        const std::string value = entry.substr(eq + 1);
        const auto us = name.find('_');
        if (us == std::string::npos) continue;
        std::string section = name.substr(0, us);
        std::string key = name.substr(us + 1);
        for (char& c : section) c = static_cast<char>(std::tolower(c));
        for (char& c : key) c = static_cast<char>(std::tolower(c));
        bool known = false;
        for (const char* s : sections) known = known || section == s;
        if (!known) continue;
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            parsed = value; // plain string
        }
        root[section][key] = parsed;
    }
    if (!root.empty()) apply_json(cfg, root);
}

} // namespace

void validate(const SimulationConfig& cfg) {
    if (cfg.sim.agents < 2) throw ConfigError("sim.agents", "agents must be at least 2");
    if (cfg.sim.days < 1) throw ConfigError("sim.days", "days must be at least 1");
    if (cfg.sim.capacity < 1) throw ConfigError("sim.capacity", "capacity must be at least 1");
    if (!(cfg.sim.tick_cap_mult >= 0.0))
        throw ConfigError("sim.tick_cap_mult", "tick cap multiplier must be nonnegative");
    if (cfg.sim.trip_pool < 1) throw ConfigError("sim.trip_pool", "trip pool must be positive");
    if (cfg.sim.sample_bins < 1) throw ConfigError("sim.sample_bins", "bins must be positive");
    if (!(cfg.sim.gaussian_sd > 0.0))
        throw ConfigError("sim.gaussian_sd", "gaussian sd must be positive");
    if (cfg.grid.width < 1 || cfg.grid.height < 1)
        throw ConfigError("grid.width", "grid must be at least 1x1");
    if (!(cfg.grid.cell_km > 0.0))
        throw ConfigError("grid.cell_km", "cell_km must be positive");
    validate(cfg.economy);
    validate(cfg.population);
    validate(cfg.marl);
    validate(cfg.pso);
    validate(cfg.metrics.reintegration);
    if (!(cfg.metrics.emission_kg_per_km >= 0.0))
        throw ConfigError("metrics.emission_kg_per_km", "emission factor must be nonnegative");
    if (cfg.metrics.lorenz_grid < 1)
        throw ConfigError("metrics.lorenz_grid", "lorenz grid must be positive");
}

SimulationConfig load_config(const std::string& path_or_empty) {
    SimulationConfig cfg;
    if (!path_or_empty.empty()) {
        std::ifstream in(path_or_empty);
        if (!in) throw InputError("cannot open config file: " + path_or_empty);
        json root;
        try {
            in >> root;
        } catch (const json::exception& e) {
            throw InputError("config file is not valid JSON: " + std::string(e.what()));
        }
        apply_json(cfg, root);
    }
    apply_env(cfg);
    return cfg;
}

std::string dump_config(const SimulationConfig& cfg) {
    json root;
    root["sim"] = {{"agents", cfg.sim.agents},
                   {"days", cfg.sim.days},
                   {"init", to_string(cfg.sim.init)},
                   {"population", to_string(cfg.sim.population)},
                   {"matcher", to_string(cfg.sim.matcher)},
                   {"capacity", cfg.sim.capacity},
                   {"seed", cfg.sim.seed},
                   {"out", cfg.sim.out_dir},
                   {"unserved_solo", cfg.sim.unserved_solo},
                   {"tick_cap_mult", cfg.sim.tick_cap_mult},
                   {"checkpoint", cfg.sim.checkpoint},
                   {"trips_file", cfg.sim.trips_file},
                   {"trip_pool", cfg.sim.trip_pool},
                   {"sample_bins", cfg.sim.sample_bins},
                   {"gaussian_mean", cfg.sim.gaussian_mean},
                   {"gaussian_sd", cfg.sim.gaussian_sd},
                   {"kernels", cfg.sim.kernels},
                   {"save_daylogs", cfg.sim.save_daylogs}};
    root["grid"] = {{"width", cfg.grid.width},
                    {"height", cfg.grid.height},
                    {"cell_km", cfg.grid.cell_km},
                    {"distance_matrix", cfg.grid.distance_matrix}};
    root["economy"] = {{"alpha_s", cfg.economy.alpha_s}, {"beta_s", cfg.economy.beta_s}};
    root["population"] = {{"alpha_bd", cfg.population.alpha_bd},
                          {"beta_bd", cfg.population.beta_bd},
                          {"gamma_bd", cfg.population.gamma_bd},
                          {"delta_bd", cfg.population.delta_bd},
                          {"s_th", cfg.population.s_th},
                          {"p_base", cfg.population.p_base},
                          {"phase_early_end", cfg.population.phase_early_end},
                          {"phase_laggard_start", cfg.population.phase_laggard_start},
                          {"share_early", cfg.population.share_early},
                          {"share_majority", cfg.population.share_majority},
                          {"share_laggard", cfg.population.share_laggard},
                          {"urgency_lo", cfg.population.urgency_lo},
                          {"urgency_hi", cfg.population.urgency_hi},
                          {"urgency_horizon_days", cfg.population.urgency_horizon_days},
                          {"network_low", cfg.population.network_low},
                          {"network_mid", cfg.population.network_mid},
                          {"network_high", cfg.population.network_high},
                          {"initial_active_fraction", cfg.population.initial_active_fraction},
                          {"init_base_early", cfg.population.init_base_early},
                          {"init_base_majority", cfg.population.init_base_majority},
                          {"init_base_laggard", cfg.population.init_base_laggard},
                          {"init_adjust_scale", cfg.population.init_adjust_scale},
                          {"init_jitter", cfg.population.init_jitter}};
    root["marl"] = {{"rider_slots", cfg.marl.rider_slots},
                    {"joint_agents", cfg.marl.joint_agents},
                    {"pickup_radius_cells", cfg.marl.pickup_radius_cells},
                    {"alpha_r", cfg.marl.alpha_r},
                    {"reward_raw_km", cfg.marl.reward_raw_km},
                    {"actor_lr", cfg.marl.actor_lr},
                    {"critic_lr", cfg.marl.critic_lr},
                    {"gamma", cfg.marl.gamma},
                    {"tau", cfg.marl.tau},
                    {"batch", cfg.marl.batch},
                    {"buffer", cfg.marl.buffer},
                    {"priority_exponent", cfg.marl.priority_exponent},
                    {"explore_start", cfg.marl.explore_start},
                    {"explore_end", cfg.marl.explore_end},
                    {"train_episodes", cfg.marl.train_episodes},
                    {"steps_per_episode", cfg.marl.steps_per_episode},
                    {"actor_hidden", cfg.marl.actor_hidden},
                    {"critic_hidden", cfg.marl.critic_hidden},
                    {"per_agent_nets", cfg.marl.per_agent_nets}};
    root["pso"] = {{"swarm", cfg.pso.swarm},
                   {"iterations", cfg.pso.iterations},
                   {"inertia", cfg.pso.inertia},
                   {"cognitive", cfg.pso.cognitive},
                   {"social", cfg.pso.social},
                   {"alpha_r", cfg.pso.alpha_r},
                   {"beta_pso", cfg.pso.beta_pso}};
    root["metrics"] = {{"emission_kg_per_km", cfg.metrics.emission_kg_per_km},
                       {"density_threshold", cfg.metrics.density_threshold},
                       {"lorenz_grid", cfg.metrics.lorenz_grid},
                       {"reint_alpha", cfg.metrics.reintegration.alpha},
                       {"reint_beta", cfg.metrics.reintegration.beta},
                       {"reint_gamma", cfg.metrics.reintegration.gamma},
                       {"reint_delta", cfg.metrics.reintegration.delta},
                       {"lambda", cfg.metrics.reintegration.lambda},
                       {"tau_days", cfg.metrics.reintegration.tau_days}};
    return root.dump(2);
}

std::uint64_t config_hash(const SimulationConfig& cfg) {
    return tag_of(dump_config(cfg));
}

const char* to_string(InitDistribution v) {
    return v == InitDistribution::uniform ? "uniform" : "gaussian";
}
const char* to_string(PopulationMode v) {
    return v == PopulationMode::fixed ? "fixed" : "birth-death";
}
const char* to_string(MatcherKind v) {
    switch (v) {
        case MatcherKind::none: return "none";
        case MatcherKind::pso: return "pso";
        case MatcherKind::maddpg: return "maddpg";
    }
    return "none";
}

} // namespace ars
