#pragma once
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ars/config.hpp"
#include "ars/grid.hpp"
#include "ars/ingest.hpp"
#include "ars/marl.hpp"
#include "ars/metrics.hpp"
#include "ars/population.hpp"
#include "ars/pso.hpp"
#include "ars/roles.hpp"

namespace ars {

struct MetricsLedger {
    std::vector<DayLog> days;
    std::vector<LifecycleEvent> events; // all lifecycle events across the run
};

struct SimulationReport {
    MetricsLedger ledger;
    std::map<std::string, std::string> tables; // file name -> contents
    std::string manifest;

    DistanceCo2 distance;
    DetourFactor detour;
    std::optional<double> mean_utilization;
    std::optional<double> mean_acceptance;
    TrafficDensity density;
    LorenzResult lorenz;
    ReintegrationScore reintegration;
    std::optional<RatioStats> ratio;
    std::vector<Score01> final_scores;
    int anomalies = 0;
};

// Owns the world, roster, streams and (optionally) the matching policy, and
// drives the multi-day loop. A single run is sequential and deterministic.
class Simulation {
public:
    explicit Simulation(SimulationConfig cfg);

    const SimulationConfig& config() const { return cfg_; }
    const GridWorld& grid() const { return *grid_; }
    const std::vector<TripSpec>& trip_pool() const { return pool_; }
    const std::vector<AgentRecord>& roster() const { return roster_; }

    // MADDPG policy management. run() trains automatically when the matcher
    // is maddpg and no checkpoint is attached or configured.
    void attach_policy(PolicyBundle bundle);
    const PolicyBundle* policy() const { return bundle_ ? bundle_.get() : nullptr; }
    PolicyBundle train_policy();

    // One simulated day; advances roster scores and lifecycle state.
    DayLog run_day(int day);

    // Full run: optional training, T days, metric tables.
    SimulationReport run();

    const MetricsLedger& ledger() const { return ledger_; }

private:
    struct DayOutcome;
    DayLog simulate_day(int day, std::vector<AgentRecord>& roster, bool training_mode,
                        double explore_rate, std::uint64_t stream_salt, MarlBuffer* buffer);
    void init_roster(std::vector<AgentRecord>& roster, RngStream& rng) const;

    SimulationConfig cfg_;
    std::unique_ptr<GridWorld> grid_;
    std::vector<TripSpec> pool_;
    std::vector<AgentRecord> roster_;
    std::unique_ptr<PolicyBundle> bundle_;
    MetricsLedger ledger_;
    double theta_km_ = 0.0;
    int prev_day_dropouts_ = 0;
    int prev_day_active_ = 0;
};

// Writes report.tables into out_dir plus the manifest and (optionally) the
// day logs; creates the directory if needed.
void write_report(const SimulationReport& report, const std::string& out_dir,
                  bool save_daylogs);

// Day-log container round-trip for the `report` subcommand.
std::string serialize_daylogs(const MetricsLedger& ledger, int cell_count);
MetricsLedger parse_daylogs(const std::string& text);

// Recompute every metric table from a ledger (the tail of run()).
SimulationReport build_report(const MetricsLedger& ledger, const SimulationConfig& cfg);

inline constexpr const char* kVersion = "ars 0.1.0";

} // namespace ars
