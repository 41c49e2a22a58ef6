#pragma once
#include <map>
#include <optional>
#include <vector>

#include "ars/population.hpp"
#include "ars/roles.hpp"

namespace ars {

struct AgentDayRow {
    int agent_id = -1;
    Role role = Role::driver;
    bool served = false;        // riders: picked up by a driver
    double direct_km = 0.0;     // solo trip distance
    double driven_km = 0.0;     // self-driven km (driver route or solo fallback)
    double onboard_km = 0.0;    // riders: km ridden in someone's vehicle
    double trip_min = 0.0;      // request-to-arrival for riders, drive time for drivers
    double detour_km = 0.0;     // drivers: driven - direct
    double personal_benefit = 0.0; // distance saved
    double traffic_benefit = 0.0;  // share of removed vehicle-km
};

struct DayLog {
    int day = 0;
    int n_active = 0;
    int n_drivers = 0;
    int n_riders = 0;
    int served_riders = 0;
    int ticks = 0;
    int anomalies = 0;
    double altruism_mean = 0.0;
    double altruism_std = 0.0;
    std::vector<AgentDayRow> rows;
    std::vector<double> cell_vehicle_ticks;  // per cell, vehicles counted per tick
    std::vector<int> moving_drivers;         // per tick
    std::vector<int> riders_in_vehicle;      // per tick
    std::vector<LifecycleEvent> events;
};

// ---- metric 1: total distance and CO2 ----
struct DistanceCo2 {
    double distance_km = 0.0;
    double co2_kg = 0.0;
};
DistanceCo2 total_distance_and_co2(const std::vector<DayLog>& logs, double epsilon_avg,
                                   bool include_unserved_solo = true);

// ---- metric 2: mean driver detour factor; driver-days with zero direct
// distance are excluded and counted ----
struct DetourFactor {
    double mean = 1.0;
    std::size_t driver_days = 0;
    std::size_t excluded = 0;
};
DetourFactor detour_factor(const std::vector<DayLog>& logs);

// ---- metric 3: average trip time for one day, minutes ----
double avg_trip_time(const DayLog& log);

// ---- metric 4: vehicle occupancy; ticks without moving drivers are skipped ----
struct UtilizationDay {
    std::vector<double> per_tick;
    std::optional<double> mean;
};
UtilizationDay vehicle_utilization(const DayLog& log);

// ---- metric 5: road traffic density ----
struct TrafficDensity {
    std::vector<double> density; // per cell, mean over days of per-tick expectation
    int dense_cells = 0;
    double total = 0.0;
};
TrafficDensity traffic_density(const std::vector<DayLog>& logs, int cell_count,
                               double rho_threshold);

// ---- metric 6: rider acceptance rate; undefined when no riders ----
std::optional<double> acceptance_rate(const DayLog& log);

// ---- metric 7: Lorenz / Gini benefit distribution ----
struct LorenzCurve {
    std::vector<double> population_share;  // ascending, 0..1
    std::vector<double> benefit_share;     // cumulative, 0..1
};
struct LorenzResult {
    LorenzCurve distance;
    LorenzCurve traffic;
    std::vector<std::vector<double>> surface; // (grid+1)^2 joint cumulative shares
    double gini_distance = 0.0;
    double gini_traffic = 0.0;
    std::size_t floored_negative = 0; // benefits clipped up to zero
};
LorenzResult lorenz_and_gini(std::vector<double> personal, std::vector<double> community,
                             std::size_t surface_grid = 20);

double gini_coefficient(std::vector<double> values);

// Per-agent benefit accumulation across days.
struct BenefitVectors {
    std::vector<int> agent_ids;
    std::vector<double> personal;
    std::vector<double> community;
};
BenefitVectors accumulate_benefits(const std::vector<DayLog>& logs);

// ---- metric 8: reintegration ----
struct ReintegrationWeights {
    double alpha = 0.25;
    double beta = 0.25;
    double gamma = 0.25;
    double delta = 0.25;
    double lambda = 0.2;
    int tau_days = 3;
};
void validate(const ReintegrationWeights& w);

struct ReintegrationScore {
    std::size_t dropouts = 0;
    std::size_t returns = 0;
    double r_basic = 0.0;
    double r_time = 0.0;
    double r_quick = 0.0;
    double r_stable = 0.0;
    double avg_return_days = 0.0;
    std::optional<double> reint; // 0-100; empty when no dropouts occurred
};
ReintegrationScore reintegration_score(const std::vector<LifecycleEvent>& events,
                                       const ReintegrationWeights& w);

// ---- driver/rider ratio confidence interval ----
struct RatioStats {
    double mean = 0.0;
    double sd = 0.0;
    double cv = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};
inline constexpr double kZ995 = 2.5758; // 99% two-sided normal quantile
RatioStats ratio_confidence_interval(const std::vector<double>& series);

} // namespace ars
