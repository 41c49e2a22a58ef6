#include "ars/population.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ars {

std::vector<std::string> validate(const PopulationParams& p) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0 && std::isfinite(v); };
    if (!in01(p.alpha_bd))
        throw ConfigError("population.alpha_bd", "alpha_bd must lie in [0,1]");
    if (!in01(p.gamma_bd))
        throw ConfigError("population.gamma_bd", "gamma_bd must lie in [0,1]");
    if (p.delta_bd > p.gamma_bd)
        throw ConfigError("population.delta_bd", "delta_bd must not exceed gamma_bd");
    if (!(p.beta_bd >= 0.0) || !std::isfinite(p.beta_bd))
        throw ConfigError("population.beta_bd", "beta_bd must be nonnegative");
    if (!(p.s_th > 0.0) || !(p.s_th < 1.0))
        throw ConfigError("population.s_th", "s_th must lie in (0,1)");
    if (!(p.urgency_lo >= 1.0) || !(p.urgency_hi >= p.urgency_lo))
        throw ConfigError("population.urgency", "urgency range must satisfy 1 <= lo <= hi");
    if (!in01(p.initial_active_fraction))
        throw ConfigError("population.initial_active_fraction", "must lie in [0,1]");

    std::vector<std::string> warnings;
    const double left = p.alpha_bd * std::exp(-p.beta_bd * p.s_th);
    if (std::abs(left - p.gamma_bd) > 1e-6)
        warnings.push_back("dropout probability is discontinuous at s_th: exp branch gives " +
                           std::to_string(left) + ", linear branch starts at " +
                           std::to_string(p.gamma_bd));
    return warnings;
}

PopulationCensus census_of(const std::vector<AgentRecord>& roster) {
    PopulationCensus c;
    c.n_total = static_cast<int>(roster.size());
    for (const AgentRecord& a : roster) {
        switch (a.status) {
            case LifecycleStatus::active: ++c.n_active; break;
            case LifecycleStatus::unenrolled: ++c.n_never; break;
            case LifecycleStatus::inactive: ++c.n_dropout; break;
        }
    }
    return c;
}

double dropout_probability(Score01 s, double s_max, const PopulationParams& p) {
    if (s_max <= p.s_th)
        throw ConfigError("population.s_th",
                          "degenerate dropout configuration: s_max <= s_th");
    double prob;
    if (s < p.s_th) {
        prob = p.alpha_bd * std::exp(-p.beta_bd * s);
    } else {
        prob = p.gamma_bd - p.delta_bd * (s - p.s_th) / (s_max - p.s_th);
    }
    return std::clamp(prob, 0.0, 1.0);
}

double adoption_rate(const PopulationCensus& c) {
    if (c.n_total <= 0) throw ContractViolation("adoption_rate: empty population");
    return static_cast<double>(c.n_total - c.n_never) / c.n_total;
}

double f_phase(double rho, const PopulationParams& p) {
    // Multipliers proportional to the named adopter shares, normalized so the
    // early-majority band sits at 1.
    if (rho < p.phase_early_end) return p.share_early / p.share_majority;
    if (rho >= p.phase_laggard_start) return p.share_laggard / p.share_majority;
    return 1.0;
}

double f_urgency(int day, const PopulationParams& p) {
    const double horizon = std::max(1, p.urgency_horizon_days);
    const double frac = std::clamp(day / horizon, 0.0, 1.0);
    return p.urgency_lo + (p.urgency_hi - p.urgency_lo) * frac;
}

double f_network(double rho, const PopulationParams& p) {
    if (rho < 0.5) return p.network_low;
    if (rho <= 0.85) return p.network_mid;
    return p.network_high;
}

double f_reputation(double mean_altruism) {
    return 1.0 + 0.4 * (mean_altruism - 0.5);
}

double birth_probability(const PopulationCensus& c, int day, double mean_altruism,
                         const PopulationParams& p) {
    const double rho = adoption_rate(c);
    const double prob = p.p_base * f_phase(rho, p) * f_urgency(day, p) *
                        f_network(rho, p) * f_reputation(mean_altruism);
    return std::clamp(prob, 0.0, 1.0);
}

Score01 initial_altruism(double rho, double network_activity, double scarcity,
                         double recent_dropout_rate, const PopulationParams& p,
                         RngStream& rng) {
    double base;
    if (rho < p.phase_early_end) base = p.init_base_early;
    else if (rho >= p.phase_laggard_start) base = p.init_base_laggard;
    else base = p.init_base_majority;

    double score = base;
    score += p.init_adjust_scale * network_activity;      // dense participation
    score += p.init_adjust_scale * scarcity;              // FOMO bonus
    score -= p.init_adjust_scale * recent_dropout_rate;   // recent dropout trend
    if (p.init_jitter > 0.0) score += rng.uniform(-p.init_jitter, p.init_jitter);
    return std::clamp(score, 0.0, 1.0);
}

PopulationStepResult step_population(std::vector<AgentRecord>& roster, int day,
                                     double recent_dropout_rate,
                                     const PopulationParams& p, RngStream& rng) {
    const PopulationCensus before = census_of(roster);
    if (before.n_active + before.n_never + before.n_dropout != before.n_total)
        throw InternalError("step_population: census identity violated before step");

    double s_max = 0.0;
    double score_sum = 0.0;
    for (const AgentRecord& a : roster) {
        if (a.status == LifecycleStatus::active) {
            s_max = std::max(s_max, a.score);
            score_sum += a.score;
        }
    }
    // Degenerate days (every active score at or below s_th) still need a total
    // dropout rule; nudging s_max keeps the exponential branch untouched.
    s_max = std::max(s_max, p.s_th + 1e-9);
    const double mean_altruism =
        before.n_active > 0 ? score_sum / before.n_active : 0.5;
    const double p_birth = birth_probability(before, day, mean_altruism, p);
    const double rho = adoption_rate(before);
    const double network_activity =
        before.n_total > 0 ? static_cast<double>(before.n_active) / before.n_total : 0.0;

    std::vector<AgentRecord*> order;
    order.reserve(roster.size());
    for (AgentRecord& a : roster) order.push_back(&a);
    std::sort(order.begin(), order.end(),
              [](const AgentRecord* a, const AgentRecord* b) { return a->id < b->id; });

    PopulationStepResult result;
    for (AgentRecord* a : order) {
        switch (a->status) {
            case LifecycleStatus::active: {
                if (rng.uniform() < dropout_probability(a->score, s_max, p)) {
                    a->status = LifecycleStatus::inactive;
                    a->last_dropout_day = day;
                    ++a->dropout_count;
                    ++result.deaths;
                    result.events.push_back({LifecycleEventKind::dropout, a->id, day});
                }
                break;
            }
            case LifecycleStatus::inactive: {
                // Dropped-out agents keep their score and rejoin with
                // probability 1 - P_dropout(s).
                if (rng.uniform() < 1.0 - dropout_probability(a->score, s_max, p)) {
                    a->status = LifecycleStatus::active;
                    ++a->return_count;
                    ++result.returns;
                    result.events.push_back({LifecycleEventKind::returned, a->id, day});
                }
                break;
            }
            case LifecycleStatus::unenrolled: {
                if (rng.uniform() < p_birth) {
                    a->status = LifecycleStatus::active;
                    a->score = initial_altruism(rho, network_activity, rho,
                                                recent_dropout_rate, p, rng);
                    ++result.births;
                    result.events.push_back({LifecycleEventKind::birth, a->id, day});
                }
                break;
            }
        }
    }

    result.census = census_of(roster);
    if (result.census.n_active != before.n_active + result.births - result.deaths + result.returns ||
        result.census.n_never != before.n_never - result.births ||
        result.census.n_dropout != before.n_dropout + result.deaths - result.returns)
        throw InternalError("step_population: census update identity violated");
    return result;
}

} // namespace ars
