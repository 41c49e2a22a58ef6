#pragma once
#include <string>
#include <vector>

#include "ars/economy.hpp"
#include "ars/rng.hpp"

namespace ars {

enum class LifecycleStatus : unsigned char { unenrolled = 0, active = 1, inactive = 2 };

// Roster entry shared with the simulation driver. Daily role and trip live in
// per-day structures; this is the persistent part of an agent.
struct AgentRecord {
    int id = -1;
    Score01 score = 0.0;
    LifecycleStatus status = LifecycleStatus::unenrolled;
    int last_dropout_day = -1;
    int dropout_count = 0;
    int return_count = 0;
};

struct PopulationParams {
    // Dropout curve (Eq. form: exponential below s_th, linear taper above).
    // Defaults make the two branches continuous at s_th.
    double alpha_bd = 0.3;
    double beta_bd = 5.0;
    double gamma_bd = 0.3 * 0.0820849986238988; // 0.3 * e^-2.5
    double delta_bd = 0.02;
    double s_th = 0.5;

    // Birth model.
    double p_base = 0.02; // per unenrolled agent per day
    double phase_early_end = 0.16;
    double phase_laggard_start = 0.84;
    double share_early = 0.12;
    double share_majority = 0.18;
    double share_laggard = 0.08;
    double urgency_lo = 1.0;
    double urgency_hi = 3.0;
    int urgency_horizon_days = 100;
    double network_low = 1.0;  // adoption < 0.5
    double network_mid = 1.2;  // adoption in [0.5, 0.85]
    double network_high = 0.8; // adoption > 0.85

    double initial_active_fraction = 0.5;

    // Newcomer initial altruism: monotone phase schedule plus bounded
    // adjustments for network effects, scarcity and recent dropouts.
    double init_base_early = 0.7;
    double init_base_majority = 0.5;
    double init_base_laggard = 0.35;
    double init_adjust_scale = 0.1;
    double init_jitter = 0.0;
};

// Returns human-readable warnings (e.g. a dropout curve discontinuity);
// throws ConfigError on hard violations.
std::vector<std::string> validate(const PopulationParams& p);

struct PopulationCensus {
    int n_active = 0;
    int n_never = 0;
    int n_dropout = 0;
    int n_total = 0;
};

PopulationCensus census_of(const std::vector<AgentRecord>& roster);

// Dropout probability for score s given the day's maximum active score.
// Requires s_max > s_th; result clamped to [0,1].
double dropout_probability(Score01 s, double s_max, const PopulationParams& p);

// Birth-model factors, exposed individually; the probability is their
// product with P_base, clamped to [0,1].
double adoption_rate(const PopulationCensus& c);
double f_phase(double rho, const PopulationParams& p);
double f_urgency(int day, const PopulationParams& p);
double f_network(double rho, const PopulationParams& p);
double f_reputation(double mean_altruism);
double birth_probability(const PopulationCensus& c, int day, double mean_altruism,
                         const PopulationParams& p);

// Initial score for a newcomer; deterministic per seed.
Score01 initial_altruism(double rho, double network_activity, double scarcity,
                         double recent_dropout_rate, const PopulationParams& p,
                         RngStream& rng);

enum class LifecycleEventKind : unsigned char { dropout = 0, returned = 1, birth = 2 };

struct LifecycleEvent {
    LifecycleEventKind kind;
    int agent_id;
    int day;
};

struct PopulationStepResult {
    std::vector<LifecycleEvent> events;
    PopulationCensus census; // after the step
    int births = 0;
    int deaths = 0;
    int returns = 0;
};

// One day of birth/dropout/return sampling. Transitions are decided from the
// pre-step snapshot in ascending agent-id order; returning agents keep their
// stored score. `recent_dropout_rate` feeds the newcomer score adjustment.
PopulationStepResult step_population(std::vector<AgentRecord>& roster, int day,
                                     double recent_dropout_rate,
                                     const PopulationParams& p, RngStream& rng);

} // namespace ars
