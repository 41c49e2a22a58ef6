#include "ars/metrics.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ars {

DistanceCo2 total_distance_and_co2(const std::vector<DayLog>& logs, double epsilon_avg,
                                   bool include_unserved_solo) {
    DistanceCo2 out;
    for (const DayLog& log : logs) {
        for (const AgentDayRow& row : log.rows) {
            if (row.role == Role::driver) {
                out.distance_km += row.driven_km;
            } else if (!row.served && include_unserved_solo) {
                out.distance_km += row.driven_km;
            }
        }
    }
    out.co2_kg = out.distance_km * epsilon_avg;
    return out;
}

DetourFactor detour_factor(const std::vector<DayLog>& logs) {
    DetourFactor out;
    double sum = 0.0;
    for (const DayLog& log : logs) {
        for (const AgentDayRow& row : log.rows) {
            if (row.role != Role::driver) continue;
            if (!(row.direct_km > 0.0)) {
                ++out.excluded;
                continue;
            }
            sum += row.driven_km / row.direct_km;
            ++out.driver_days;
        }
    }
    out.mean = out.driver_days ? sum / static_cast<double>(out.driver_days) : 1.0;
    return out;
}

double avg_trip_time(const DayLog& log) {
    if (log.rows.empty()) return 0.0;
    double sum = 0.0;
    for (const AgentDayRow& row : log.rows) sum += row.trip_min;
    return sum / static_cast<double>(log.rows.size());
}

UtilizationDay vehicle_utilization(const DayLog& log) {
    UtilizationDay out;
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t t = 0; t < log.moving_drivers.size(); ++t) {
        if (log.moving_drivers[t] <= 0) continue; // undefined tick, skipped
        const double u = (log.moving_drivers[t] + log.riders_in_vehicle[t]) /
                         static_cast<double>(log.moving_drivers[t]);
        out.per_tick.push_back(u);
        sum += u;
        ++counted;
    }
    if (counted) out.mean = sum / static_cast<double>(counted);
    return out;
}

TrafficDensity traffic_density(const std::vector<DayLog>& logs, int cell_count,
                               double rho_threshold) {
    TrafficDensity out;
    out.density.assign(static_cast<std::size_t>(cell_count), 0.0);
    std::size_t days = 0;
    for (const DayLog& log : logs) {
        if (log.ticks <= 0) continue;
        if (log.cell_vehicle_ticks.size() != out.density.size())
            throw ContractViolation("traffic_density: cell grid size mismatch");
        for (std::size_t c = 0; c < out.density.size(); ++c)
            out.density[c] += log.cell_vehicle_ticks[c] / log.ticks;
        ++days;
    }
    if (days) {
        for (double& d : out.density) d /= static_cast<double>(days);
    }
    for (double d : out.density) {
        out.total += d;
        if (d > rho_threshold) ++out.dense_cells;
    }
    return out;
}

std::optional<double> acceptance_rate(const DayLog& log) {
    if (log.n_riders <= 0) return std::nullopt;
    return static_cast<double>(log.served_riders) / log.n_riders;
}

namespace {

LorenzCurve lorenz_curve(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double total = std::accumulate(values.begin(), values.end(), 0.0);

    LorenzCurve curve;
    curve.population_share.push_back(0.0);
    curve.benefit_share.push_back(0.0);
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cum += values[i];
        curve.population_share.push_back(static_cast<double>(i + 1) / n);
        curve.benefit_share.push_back(total > 0.0 ? cum / total
                                                  : static_cast<double>(i + 1) / n);
    }
    return curve;
}

double gini_from_curve(const LorenzCurve& c) {
    // 1 - 2 * integral of the Lorenz curve, trapezoid rule
    double integral = 0.0;
    for (std::size_t i = 1; i < c.population_share.size(); ++i) {
        const double dx = c.population_share[i] - c.population_share[i - 1];
        integral += dx * 0.5 * (c.benefit_share[i] + c.benefit_share[i - 1]);
    }
    return 1.0 - 2.0 * integral;
}

} // namespace

double gini_coefficient(std::vector<double> values) {
    if (values.empty()) return 0.0;
    for (double v : values)
        if (v < 0.0) throw ContractViolation("gini_coefficient: negative value");
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    if (!(total > 0.0)) return 0.0; // all-zero benefit vector
    return gini_from_curve(lorenz_curve(std::move(values)));
}

LorenzResult lorenz_and_gini(std::vector<double> personal, std::vector<double> community,
                             std::size_t surface_grid) {
    if (personal.size() != community.size())
        throw ContractViolation("lorenz_and_gini: benefit vectors differ in length");
    if (personal.empty()) throw ContractViolation("lorenz_and_gini: empty benefit vectors");

    LorenzResult out;
    for (double& v : personal)
        if (v < 0.0) {
            v = 0.0;
            ++out.floored_negative;
        }
    for (double& v : community)
        if (v < 0.0) {
            v = 0.0;
            ++out.floored_negative;
        }

    out.distance = lorenz_curve(personal);
    out.traffic = lorenz_curve(community);
    const double tot_p = std::accumulate(personal.begin(), personal.end(), 0.0);
    const double tot_c = std::accumulate(community.begin(), community.end(), 0.0);
    out.gini_distance = tot_p > 0.0 ? gini_from_curve(out.distance) : 0.0;
    out.gini_traffic = tot_c > 0.0 ? gini_from_curve(out.traffic) : 0.0;

    // joint cumulative share surface over population quantiles: entry (i,j) is
    // the combined-benefit share held by agents in both the i lowest by
    // distance benefit and the j lowest by traffic benefit
    const std::size_t n = personal.size();
    std::vector<std::size_t> rank_p(n), rank_c(n);
    {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return personal[a] < personal[b]; });
        for (std::size_t r = 0; r < n; ++r) rank_p[idx[r]] = r;
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return community[a] < community[b]; });
        for (std::size_t r = 0; r < n; ++r) rank_c[idx[r]] = r;
    }
    const double combined_total = tot_p + tot_c;
    out.surface.assign(surface_grid + 1, std::vector<double>(surface_grid + 1, 0.0));
    for (std::size_t gi = 0; gi <= surface_grid; ++gi) {
        const auto cut_p = static_cast<std::size_t>(
            std::llround(static_cast<double>(gi) / surface_grid * n));
        for (std::size_t gj = 0; gj <= surface_grid; ++gj) {
            const auto cut_c = static_cast<std::size_t>(
                std::llround(static_cast<double>(gj) / surface_grid * n));
            double share = 0.0;
            for (std::size_t a = 0; a < n; ++a)
                if (rank_p[a] < cut_p && rank_c[a] < cut_c)
                    share += personal[a] + community[a];
            out.surface[gi][gj] =
                combined_total > 0.0 ? share / combined_total : 0.0;
        }
    }
    return out;
}

BenefitVectors accumulate_benefits(const std::vector<DayLog>& logs) {
    std::map<int, std::pair<double, double>> acc;
    for (const DayLog& log : logs)
        for (const AgentDayRow& row : log.rows) {
            acc[row.agent_id].first += row.personal_benefit;
            acc[row.agent_id].second += row.traffic_benefit;
        }
    BenefitVectors out;
    for (const auto& [id, pair] : acc) {
        out.agent_ids.push_back(id);
        out.personal.push_back(pair.first);
        out.community.push_back(pair.second);
    }
    return out;
}

void validate(const ReintegrationWeights& w) {
    if (w.alpha < 0 || w.beta < 0 || w.gamma < 0 || w.delta < 0)
        throw ConfigError("metrics.reintegration", "weights must be nonnegative");
    if (std::abs(w.alpha + w.beta + w.gamma + w.delta - 1.0) > 1e-9)
        throw ConfigError("metrics.reintegration", "weights must sum to 1");
    if (!(w.lambda > 0.0))
        throw ConfigError("metrics.lambda", "lambda must be positive");
    if (w.tau_days < 0)
        throw ConfigError("metrics.tau_days", "tau must be nonnegative");
}

ReintegrationScore reintegration_score(const std::vector<LifecycleEvent>& events,
                                       const ReintegrationWeights& w) {
    validate(w);
    ReintegrationScore out;

    // pair each return with the dropout it ends, per agent in day order
    std::map<int, std::vector<LifecycleEvent>> per_agent;
    for (const LifecycleEvent& e : events) per_agent[e.agent_id].push_back(e);

    std::vector<int> gaps; // d_r - d_o per return
    std::map<int, int> agent_returns;
    std::map<int, bool> dropped_after_return;
    for (auto& [agent, evs] : per_agent) {
        std::stable_sort(evs.begin(), evs.end(),
                         [](const LifecycleEvent& a, const LifecycleEvent& b) {
                             return a.day < b.day;
                         });
        int open_dropout = -1;
        for (const LifecycleEvent& e : evs) {
            if (e.kind == LifecycleEventKind::dropout) {
                ++out.dropouts;
                open_dropout = e.day;
                if (agent_returns.count(agent) && agent_returns[agent] > 0)
                    dropped_after_return[agent] = true;
            } else if (e.kind == LifecycleEventKind::returned) {
                if (open_dropout < 0)
                    throw ContractViolation("reintegration_score: return without prior dropout");
                ++out.returns;
                gaps.push_back(e.day - open_dropout);
                ++agent_returns[agent];
                open_dropout = -1;
            }
        }
    }

    if (out.dropouts == 0) return out; // REINT not applicable

    out.r_basic = static_cast<double>(out.returns) / out.dropouts;
    if (out.returns > 0) {
        double time_sum = 0.0;
        std::size_t quick = 0;
        double gap_sum = 0.0;
        for (int gap : gaps) {
            time_sum += std::exp(-w.lambda * gap);
            gap_sum += gap;
            if (gap <= w.tau_days) ++quick;
        }
        out.r_time = time_sum / out.returns;
        out.r_quick = static_cast<double>(quick) / out.returns;
        out.avg_return_days = gap_sum / out.returns;
    }

    std::size_t unique_returning = 0;
    std::size_t stable = 0;
    for (const auto& [agent, n_returns] : agent_returns) {
        if (n_returns == 0) continue;
        ++unique_returning;
        if (n_returns == 1 && !dropped_after_return[agent]) ++stable;
    }
    out.r_stable = unique_returning ? static_cast<double>(stable) / unique_returning : 0.0;

    out.reint = 100.0 * (w.alpha * out.r_basic + w.beta * out.r_time +
                         w.gamma * out.r_quick + w.delta * out.r_stable);
    return out;
}

RatioStats ratio_confidence_interval(const std::vector<double>& series) {
    if (series.size() < 2)
        throw InputError("ratio_confidence_interval: need at least two observations");
    RatioStats out;
    const double n = static_cast<double>(series.size());
    out.mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : series) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
    out.cv = out.mean != 0.0 ? out.sd / out.mean : 0.0;
    const double half = kZ995 * out.sd / std::sqrt(n);
    out.ci_low = out.mean - half;
    out.ci_high = out.mean + half;
    return out;
}

} // namespace ars
