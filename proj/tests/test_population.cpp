#include <doctest.h>

#include <cmath>

#include "ars/errors.hpp"
#include "ars/population.hpp"

using namespace ars;

TEST_CASE("dropout probability: branch values") {
    PopulationParams p; // continuous defaults
    CHECK(dropout_probability(0.0, 1.0, p) == doctest::Approx(p.alpha_bd));
    CHECK(dropout_probability(1.0, 1.0, p) == doctest::Approx(p.gamma_bd - p.delta_bd));

    PopulationParams q;
    q.alpha_bd = 0.3;
    q.beta_bd = 5.0;
    q.s_th = 0.5;
    CHECK(dropout_probability(0.1, 1.0, q) == doctest::Approx(0.3 * std::exp(-0.5)));
    CHECK_THROWS_AS(dropout_probability(0.6, 0.4, q), ConfigError);
}

TEST_CASE("dropout probability is nonincreasing within each branch") {
    PopulationParams p;
    double prev = 2.0;
    for (double s = 0.0; s < p.s_th; s += 0.01) {
        const double v = dropout_probability(s, 1.0, p);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    prev = 2.0;
    for (double s = p.s_th; s <= 1.0; s += 0.01) {
        const double v = dropout_probability(s, 1.0, p);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("continuity validator warns on a probability cliff") {
    PopulationParams p;
    CHECK(validate(p).empty()); // defaults are continuous
    p.gamma_bd = 0.2;
    p.delta_bd = 0.02;
    CHECK(!validate(p).empty());
}

TEST_CASE("birth probability equals the factor-product oracle") {
    PopulationParams p;
    PopulationCensus c{40, 50, 10, 100};
    const int day = 30;
    const double mean_altruism = 0.62;

    // independent factor recomputation
    const double rho = (100.0 - 50.0) / 100.0;
    double phase;
    if (rho < p.phase_early_end) phase = p.share_early / p.share_majority;
    else if (rho >= p.phase_laggard_start) phase = p.share_laggard / p.share_majority;
    else phase = 1.0;
    const double urgency =
        p.urgency_lo + (p.urgency_hi - p.urgency_lo) *
                           std::min(1.0, static_cast<double>(day) / p.urgency_horizon_days);
    const double network = rho < 0.5 ? p.network_low : (rho <= 0.85 ? p.network_mid : p.network_high);
    const double reputation = 1.0 + 0.4 * (mean_altruism - 0.5);
    const double expect =
        std::min(1.0, p.p_base * phase * urgency * network * reputation);

    CHECK(birth_probability(c, day, mean_altruism, p) == doctest::Approx(expect));
}

TEST_CASE("birth probability edge values") {
    PopulationParams p;
    CHECK(f_reputation(0.5) == doctest::Approx(1.0));

    PopulationCensus pre{0, 100, 0, 100}; // nobody has ever joined
    CHECK(adoption_rate(pre) == 0.0);
    const double v = birth_probability(pre, 1, 0.5, p);
    CHECK(v == doctest::Approx(p.p_base * f_phase(0.0, p) * f_urgency(1, p) *
                               f_network(0.0, p) * 1.0));

    PopulationCensus sat{90, 0, 10, 100}; // everyone enrolled at least once
    const double w = birth_probability(sat, 200, 1.0, p);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
}

TEST_CASE("initial altruism: neutral inputs return the phase base") {
    PopulationParams p;
    RngStream rng(1);
    CHECK(initial_altruism(0.05, 0.0, 0.0, 0.0, p, rng) == doctest::Approx(p.init_base_early));
    CHECK(initial_altruism(0.5, 0.0, 0.0, 0.0, p, rng) ==
          doctest::Approx(p.init_base_majority));
    CHECK(initial_altruism(0.95, 0.0, 0.0, 0.0, p, rng) ==
          doctest::Approx(p.init_base_laggard));
    // maxima stay clamped
    CHECK(initial_altruism(0.05, 1.0, 1.0, 0.0, p, rng) <= 1.0);
    // early phase base exceeds laggard base
    CHECK(initial_altruism(0.05, 0.0, 0.0, 0.0, p, rng) >
          initial_altruism(0.95, 0.0, 0.0, 0.0, p, rng));
}

namespace {
std::vector<AgentRecord> make_roster(int active, int never, int dropout) {
    std::vector<AgentRecord> roster;
    int id = 0;
    for (int i = 0; i < active; ++i)
        roster.push_back({id++, 0.5, LifecycleStatus::active, -1, 0, 0});
    for (int i = 0; i < never; ++i)
        roster.push_back({id++, 0.0, LifecycleStatus::unenrolled, -1, 0, 0});
    for (int i = 0; i < dropout; ++i)
        roster.push_back({id++, 0.4, LifecycleStatus::inactive, 0, 1, 0});
    return roster;
}
} // namespace

TEST_CASE("step with all probabilities forced to zero leaves the census unchanged") {
    PopulationParams p;
    p.alpha_bd = 0.0;
    p.gamma_bd = 0.0;
    p.delta_bd = 0.0;
    p.p_base = 0.0;
    auto roster = make_roster(10, 5, 0);
    RngStream rng(1);
    const auto result = step_population(roster, 1, 0.0, p, rng);
    CHECK(result.births == 0);
    CHECK(result.deaths == 0);
    CHECK(result.returns == 0);
    CHECK(result.census.n_active == 10);
    CHECK(result.census.n_never == 5);
    CHECK(result.census.n_dropout == 0);

    // with zero dropout probability, every parked agent rejoins (prob 1 - 0)
    auto parked = make_roster(2, 0, 3);
    const auto r2 = step_population(parked, 1, 0.0, p, rng);
    CHECK(r2.returns == 3);
}

TEST_CASE("census identity holds across 1000 random steps") {
    PopulationParams p;
    auto roster = make_roster(30, 40, 10);
    RngStream rng(7);
    PopulationCensus prev = census_of(roster);
    for (int day = 1; day <= 1000; ++day) {
        const auto result = step_population(roster, day, 0.02, p, rng);
        CHECK(result.census.n_active ==
              prev.n_active + result.births - result.deaths + result.returns);
        CHECK(result.census.n_never == prev.n_never - result.births);
        CHECK(result.census.n_dropout == prev.n_dropout + result.deaths - result.returns);
        CHECK(result.census.n_active + result.census.n_never + result.census.n_dropout ==
              result.census.n_total);
        prev = result.census;
    }
}

TEST_CASE("returning agents keep their stored score") {
    PopulationParams p;
    std::vector<AgentRecord> roster{{0, 0.73, LifecycleStatus::inactive, 3, 1, 0},
                                    {1, 0.9, LifecycleStatus::active, -1, 0, 0}};
    RngStream rng(11);
    for (int day = 4; day < 200; ++day) {
        step_population(roster, day, 0.0, p, rng);
        if (roster[0].status == LifecycleStatus::active) break;
    }
    CHECK(roster[0].status == LifecycleStatus::active);
    CHECK(roster[0].score == 0.73);
    CHECK(roster[0].return_count == 1);
}

TEST_CASE("score-zero agents drop out at rate alpha_bd") {
    PopulationParams p;
    RngStream rng(13);
    int dropouts = 0;
    const int steps = 1000;
    for (int i = 0; i < steps; ++i) {
        std::vector<AgentRecord> roster{{0, 0.0, LifecycleStatus::active, -1, 0, 0},
                                        {1, 0.9, LifecycleStatus::active, -1, 0, 0}};
        const auto result = step_population(roster, 1, 0.0, p, rng);
        for (const auto& e : result.events)
            if (e.kind == LifecycleEventKind::dropout && e.agent_id == 0) ++dropouts;
    }
    const double freq = static_cast<double>(dropouts) / steps;
    const double sigma = std::sqrt(p.alpha_bd * (1 - p.alpha_bd) / steps);
    CHECK(std::abs(freq - p.alpha_bd) <= 3.0 * sigma);
}
