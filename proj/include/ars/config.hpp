#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "ars/economy.hpp"
#include "ars/marl.hpp"
#include "ars/metrics.hpp"
#include "ars/population.hpp"
#include "ars/pso.hpp"

namespace ars {

enum class InitDistribution : unsigned char { uniform = 0, gaussian = 1 };
enum class PopulationMode : unsigned char { fixed = 0, birth_death = 1 };
enum class MatcherKind : unsigned char { none = 0, pso = 1, maddpg = 2 };

struct SimSection {
    int agents = 100;
    int days = 100;
    InitDistribution init = InitDistribution::uniform;
    PopulationMode population = PopulationMode::fixed;
    MatcherKind matcher = MatcherKind::maddpg;
    int capacity = 4;
    std::uint64_t seed = 1;
    std::string out_dir = "results";
    bool unserved_solo = true;
    double tick_cap_mult = 4.0;
    std::string checkpoint;      // optional pretrained policy
    std::string trips_file;      // optional grid-trips file; empty = synthetic
    int trip_pool = 4000;        // synthetic pool size
    int sample_bins = 5;         // stratified sampling bins
    double gaussian_mean = 0.5;
    double gaussian_sd = 0.15;
    std::string kernels = "auto";
    bool save_daylogs = false;
};

struct GridSection {
    int width = 15;
    int height = 15;
    double cell_km = 0.28;
    std::string distance_matrix; // optional file; empty = synthetic Manhattan
};

struct MetricsSection {
    double emission_kg_per_km = 0.192; // conventional passenger-car figure
    double density_threshold = 0.5;
    std::size_t lorenz_grid = 20;
    ReintegrationWeights reintegration;
};

struct SimulationConfig {
    SimSection sim;
    GridSection grid;
    EconomyParams economy;
    PopulationParams population;
    MarlConfig marl;
    PsoParams pso;
    MetricsSection metrics;
};

// Validation errors carry the offending key (ConfigError).
void validate(const SimulationConfig& cfg);

// Defaults, overlaid by an optional JSON file, then ARS_SECTION_KEY
// environment variables (e.g. ARS_SIM_DAYS=10).
SimulationConfig load_config(const std::string& path_or_empty);

// Canonical dump of every key; also the basis of the manifest hash.
std::string dump_config(const SimulationConfig& cfg);
std::uint64_t config_hash(const SimulationConfig& cfg);

const char* to_string(InitDistribution v);
const char* to_string(PopulationMode v);
const char* to_string(MatcherKind v);

} // namespace ars
