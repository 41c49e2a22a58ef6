#include "ars/pso.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ars {

std::size_t Assignment::matched_count() const {
    std::size_t n = 0;
    for (const auto& [rider, driver] : rider_to_driver)
        if (driver.has_value()) ++n;
    return n;
}

void validate(const PsoParams& p) {
    if (p.swarm < 1) throw ConfigError("pso.swarm", "swarm size must be at least 1");
    if (!(p.inertia >= 0.0)) throw ConfigError("pso.inertia", "inertia must be nonnegative");
    if (!(p.cognitive >= 0.0)) throw ConfigError("pso.cognitive", "c1 must be nonnegative");
    if (!(p.social >= 0.0)) throw ConfigError("pso.social", "c2 must be nonnegative");
}

namespace {

const DayRider& rider_by_id(const DayState& day, int id) {
    for (const DayRider& r : day.riders)
        if (r.id == id) return r;
    throw ContractViolation("unknown rider id " + std::to_string(id));
}

const DayDriver& driver_by_id(const DayState& day, int id) {
    for (const DayDriver& d : day.drivers)
        if (d.id == id) return d;
    throw ContractViolation("unknown driver id " + std::to_string(id));
}

double solo_marginal_detour(const DayState& day, const DayDriver& d, const DayRider& r) {
    PickupSequence empty;
    return detour(*day.grid, d.trip, empty, r.trip, std::max<std::size_t>(1, d.capacity));
}

// Pickup order: riders append in ascending id order. The swarm search does
// not optimize the order itself; the exhaustive oracle (which does) bounds
// the gap on small instances.
PickupSequence build_sequence(const DayState& day, const DayDriver& /*d*/,
                              std::vector<int> rider_ids) {
    std::sort(rider_ids.begin(), rider_ids.end());
    PickupSequence seq;
    for (int id : rider_ids) {
        const DayRider& r = rider_by_id(day, id);
        seq.stops.push_back(PickupStop{id, r.trip.origin, r.trip.destination});
    }
    return seq;
}

bool within_tolerance(const DayState& day, const DayDriver& d, const PickupSequence& seq) {
    const double solo = day.grid->distance(d.trip.origin, d.trip.destination);
    return route_length(*day.grid, d.trip, seq) <= day.tolerance_mult * solo + 1e-9;
}

Assignment assemble(const DayState& day,
                    const std::map<int, std::vector<int>>& riders_per_driver) {
    Assignment a;
    for (const DayRider& r : day.riders) a.rider_to_driver[r.id] = std::nullopt;
    for (const auto& [driver_id, rider_ids] : riders_per_driver) {
        const DayDriver& d = driver_by_id(day, driver_id);
        a.driver_sequences[driver_id] = build_sequence(day, d, rider_ids);
        for (int rid : rider_ids) a.rider_to_driver[rid] = driver_id;
    }
    return a;
}

} // namespace

bool assignment_valid(const Assignment& a, const DayState& day) {
    std::map<int, int> times_assigned;
    for (const auto& [rider, driver] : a.rider_to_driver) {
        if (!driver.has_value()) continue;
        if (++times_assigned[rider] > 1) return false;
    }
    for (const DayDriver& d : day.drivers) {
        auto it = a.driver_sequences.find(d.id);
        if (it == a.driver_sequences.end()) continue;
        const PickupSequence& seq = it->second;
        if (seq.size() > d.capacity) return false;
        for (const PickupStop& s : seq.stops) {
            auto rt = a.rider_to_driver.find(s.rider_id);
            if (rt == a.rider_to_driver.end() || !rt->second || *rt->second != d.id)
                return false;
        }
        if (!within_tolerance(day, d, seq)) return false;
    }
    return true;
}

double fitness(const Assignment& a, const DayState& day, double alpha_r, double beta_pso) {
    if (!assignment_valid(a, day))
        throw ContractViolation("fitness: invalid assignment");

    double rider_benefit = 0.0;
    for (const auto& [rider_id, driver] : a.rider_to_driver) {
        if (!driver.has_value()) continue;
        const DayRider& r = rider_by_id(day, rider_id);
        rider_benefit += day.grid->distance(r.trip.origin, r.trip.destination);
    }

    double total_detour = 0.0;
    double altruism_points = 0.0;
    const double max_detour = day.grid->max_detour();
    for (const auto& [driver_id, seq] : a.driver_sequences) {
        if (seq.empty()) continue;
        const DayDriver& d = driver_by_id(day, driver_id);
        const double solo = day.grid->distance(d.trip.origin, d.trip.destination);
        total_detour += route_length(*day.grid, d.trip, seq) - solo;

        // per-match points follow the append order of the pickup sequence
        PickupSequence prefix;
        double prev_len = solo;
        for (const PickupStop& s : seq.stops) {
            prefix.stops.push_back(s);
            const double len = route_length(*day.grid, d.trip, prefix);
            const double delta = clamp_detour(len - prev_len, max_detour);
            const DayRider& r = rider_by_id(day, s.rider_id);
            altruism_points += driver_gain(r.score, delta, max_detour, day.economy);
            prev_len = len;
        }
    }
    return alpha_r * rider_benefit - (1.0 - alpha_r) * total_detour +
           beta_pso * altruism_points;
}

Assignment decode(const std::vector<double>& position, const DayState& day) {
    if (position.size() != day.riders.size())
        throw ContractViolation("decode: gene count does not match rider count");
    const int n_drivers = static_cast<int>(day.drivers.size());

    std::map<int, std::vector<int>> riders_per_driver;
    for (std::size_t i = 0; i < position.size(); ++i) {
        if (position[i] < 0.0 || n_drivers == 0) continue;
        int di = static_cast<int>(std::floor(position[i]));
        di = std::clamp(di, 0, n_drivers - 1);
        riders_per_driver[day.drivers[di].id].push_back(day.riders[i].id);
    }

    // capacity: keep the smallest solo-detour riders
    for (auto& [driver_id, rider_ids] : riders_per_driver) {
        const DayDriver& d = driver_by_id(day, driver_id);
        if (rider_ids.size() > d.capacity) {
            std::sort(rider_ids.begin(), rider_ids.end(), [&](int a_, int b_) {
                const double da = solo_marginal_detour(day, d, rider_by_id(day, a_));
                const double db = solo_marginal_detour(day, d, rider_by_id(day, b_));
                if (da != db) return da < db;
                return a_ < b_;
            });
            rider_ids.resize(d.capacity);
        }
    }

    // tolerance: shed the largest solo-detour rider until the route fits
    for (auto& [driver_id, rider_ids] : riders_per_driver) {
        const DayDriver& d = driver_by_id(day, driver_id);
        PickupSequence seq = build_sequence(day, d, rider_ids);
        while (!seq.empty() && !within_tolerance(day, d, seq)) {
            auto worst = std::max_element(
                rider_ids.begin(), rider_ids.end(), [&](int a_, int b_) {
                    const double da = solo_marginal_detour(day, d, rider_by_id(day, a_));
                    const double db = solo_marginal_detour(day, d, rider_by_id(day, b_));
                    if (da != db) return da < db;
                    return a_ < b_;
                });
            rider_ids.erase(worst);
            seq = build_sequence(day, d, rider_ids);
        }
    }

    std::map<int, std::vector<int>> nonempty;
    for (auto& [driver_id, rider_ids] : riders_per_driver)
        if (!rider_ids.empty()) nonempty[driver_id] = rider_ids;
    return assemble(day, nonempty);
}

void repair(Particle& p, const DayState& day) {
    const double n_drivers = static_cast<double>(day.drivers.size());
    for (double& gene : p.position) {
        if (gene < -1.0) gene = -1.0;
        if (gene >= n_drivers) gene = n_drivers - 0.5;
    }
    const Assignment a = decode(p.position, day);
    // only riders evicted by the decode get rewritten, so valid particles
    // pass through unchanged
    for (std::size_t i = 0; i < day.riders.size(); ++i) {
        const auto& driver = a.rider_to_driver.at(day.riders[i].id);
        if (!driver.has_value() && p.position[i] >= 0.0) p.position[i] = -0.5;
    }
}

namespace {

std::vector<double> encode(const Assignment& a, const DayState& day) {
    std::map<int, int> driver_index;
    for (std::size_t i = 0; i < day.drivers.size(); ++i)
        driver_index[day.drivers[i].id] = static_cast<int>(i);
    std::vector<double> genes(day.riders.size(), -0.5);
    for (std::size_t i = 0; i < day.riders.size(); ++i) {
        const auto& driver = a.rider_to_driver.at(day.riders[i].id);
        if (driver.has_value()) genes[i] = driver_index.at(*driver) + 0.5;
    }
    return genes;
}

Assignment greedy_proximity(const DayState& day) {
    std::map<int, std::vector<int>> riders_per_driver;
    std::map<int, std::size_t> load;

    // riders ordered by proximity to their closest driver
    std::vector<std::pair<double, int>> order;
    for (const DayRider& r : day.riders) {
        double best = std::numeric_limits<double>::infinity();
        for (const DayDriver& d : day.drivers)
            best = std::min(best, day.grid->distance(d.trip.origin, r.trip.origin));
        order.emplace_back(best, r.id);
    }
    std::sort(order.begin(), order.end());

    for (const auto& [dist_unused, rider_id] : order) {
        (void)dist_unused;
        const DayRider& r = rider_by_id(day, rider_id);
        const DayDriver* chosen = nullptr;
        double chosen_dist = std::numeric_limits<double>::infinity();
        for (const DayDriver& d : day.drivers) {
            if (load[d.id] >= d.capacity) continue;
            auto ids = riders_per_driver[d.id];
            ids.push_back(rider_id);
            if (!within_tolerance(day, d, build_sequence(day, d, ids))) continue;
            const double dist = day.grid->distance(d.trip.origin, r.trip.origin);
            if (dist < chosen_dist - 1e-12 ||
                (std::abs(dist - chosen_dist) <= 1e-12 && chosen && d.id < chosen->id)) {
                chosen = &d;
                chosen_dist = dist;
            }
        }
        if (chosen) {
            riders_per_driver[chosen->id].push_back(rider_id);
            ++load[chosen->id];
        }
    }

    std::map<int, std::vector<int>> nonempty;
    for (auto& [driver_id, rider_ids] : riders_per_driver)
        if (!rider_ids.empty()) nonempty[driver_id] = rider_ids;
    return assemble(day, nonempty);
}

} // namespace

Swarm init_swarm(const DayState& day, const PsoParams& p, RngStream& rng) {
    Swarm swarm;
    swarm.particles.resize(p.swarm);

    const Assignment greedy =
        day.drivers.empty() ? assemble(day, {}) : greedy_proximity(day);
    const std::vector<double> greedy_genes = encode(greedy, day);

    for (std::size_t i = 0; i < p.swarm; ++i) {
        Particle& part = swarm.particles[i];
        part.position = greedy_genes;
        part.velocity.assign(day.riders.size(), 0.0);
        if (i > 0 && !day.drivers.empty()) {
            for (double& gene : part.position)
                if (rng.uniform() < 0.3)
                    gene = rng.uniform(-1.0, static_cast<double>(day.drivers.size()));
        }
        repair(part, day);
        part.best_position = part.position;
        part.best_fitness = fitness(decode(part.position, day), day, p.alpha_r, p.beta_pso);
    }

    swarm.gbest_fitness = -std::numeric_limits<double>::infinity();
    for (const Particle& part : swarm.particles) {
        if (part.best_fitness > swarm.gbest_fitness) {
            swarm.gbest_fitness = part.best_fitness;
            swarm.gbest_position = part.best_position;
        }
    }
    return swarm;
}

void pso_step(Swarm& swarm, const DayState& day, const PsoParams& p, RngStream& rng) {
    if (swarm.gbest_position.empty() && !day.riders.empty())
        throw ContractViolation("pso_step: gbest not initialized");
    for (Particle& part : swarm.particles) {
        for (std::size_t d = 0; d < part.position.size(); ++d) {
            const double r1 = rng.uniform();
            const double r2 = rng.uniform();
            part.velocity[d] = p.inertia * part.velocity[d] +
                               p.cognitive * r1 * (part.best_position[d] - part.position[d]) +
                               p.social * r2 * (swarm.gbest_position[d] - part.position[d]);
            part.position[d] += part.velocity[d];
        }
        repair(part, day);
        const double f = fitness(decode(part.position, day), day, p.alpha_r, p.beta_pso);
        if (f > part.best_fitness) {
            part.best_fitness = f;
            part.best_position = part.position;
        }
        if (f > swarm.gbest_fitness) {
            swarm.gbest_fitness = f;
            swarm.gbest_position = part.position;
        }
    }
}

Assignment pso_solve(const DayState& day, const PsoParams& p, RngStream& rng) {
    if (day.riders.empty() || day.drivers.empty()) {
        Assignment a;
        for (const DayRider& r : day.riders) a.rider_to_driver[r.id] = std::nullopt;
        return a;
    }
    Swarm swarm = init_swarm(day, p, rng);
    for (std::size_t it = 0; it < p.iterations; ++it) pso_step(swarm, day, p, rng);
    return decode(swarm.gbest_position, day);
}

Assignment brute_force_optimal(const DayState& day, double alpha_r, double beta_pso) {
    if (day.riders.size() > 6 || day.drivers.size() > 4)
        throw SizeError("brute_force_optimal: instance exceeds guarded size (6 riders, 4 drivers)");

    const std::size_t R = day.riders.size();
    const std::size_t D = day.drivers.size();

    Assignment best;
    for (const DayRider& r : day.riders) best.rider_to_driver[r.id] = std::nullopt;
    double best_fit = fitness(best, day, alpha_r, beta_pso);

    if (R == 0) return best;

    std::vector<int> choice(R, -1); // -1 unassigned, else driver index
    const auto total = static_cast<std::uint64_t>(std::pow(D + 1.0, static_cast<double>(R)));
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        for (std::size_t i = 0; i < R; ++i) {
            choice[i] = static_cast<int>(c % (D + 1)) - 1;
            c /= (D + 1);
        }

        std::map<int, std::vector<int>> riders_per_driver;
        bool capacity_ok = true;
        for (std::size_t i = 0; i < R; ++i) {
            if (choice[i] < 0) continue;
            const DayDriver& d = day.drivers[choice[i]];
            auto& ids = riders_per_driver[d.id];
            ids.push_back(day.riders[i].id);
            if (ids.size() > d.capacity) {
                capacity_ok = false;
                break;
            }
        }
        if (!capacity_ok) continue;

        // per driver, pick the best tolerance-feasible pickup order
        Assignment a;
        for (const DayRider& r : day.riders) a.rider_to_driver[r.id] = std::nullopt;
        bool feasible = true;
        for (auto& [driver_id, rider_ids] : riders_per_driver) {
            const DayDriver& d = driver_by_id(day, driver_id);
            const double solo = day.grid->distance(d.trip.origin, d.trip.destination);
            std::sort(rider_ids.begin(), rider_ids.end());
            std::vector<int> perm = rider_ids;
            bool found = false;
            PickupSequence best_seq;
            double best_contrib = -std::numeric_limits<double>::infinity();
            do {
                PickupSequence seq;
                for (int rid : perm) {
                    const DayRider& r = rider_by_id(day, rid);
                    seq.stops.push_back({rid, r.trip.origin, r.trip.destination});
                }
                const double len = route_length(*day.grid, d.trip, seq);
                if (len > day.tolerance_mult * solo + 1e-9) continue;

                double points = 0.0;
                PickupSequence prefix;
                double prev_len = solo;
                for (const PickupStop& s : seq.stops) {
                    prefix.stops.push_back(s);
                    const double l = route_length(*day.grid, d.trip, prefix);
                    const double delta = clamp_detour(l - prev_len, day.grid->max_detour());
                    points += driver_gain(rider_by_id(day, s.rider_id).score, delta,
                                          day.grid->max_detour(), day.economy);
                    prev_len = l;
                }
                const double contrib =
                    -(1.0 - alpha_r) * (len - solo) + beta_pso * points;
                if (contrib > best_contrib + 1e-15) {
                    best_contrib = contrib;
                    best_seq = seq;
                    found = true;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            if (!found) {
                feasible = false;
                break;
            }
            a.driver_sequences[driver_id] = best_seq;
            for (int rid : rider_ids) a.rider_to_driver[rid] = driver_id;
        }
        if (!feasible) continue;

        const double f = fitness(a, day, alpha_r, beta_pso);
        if (f > best_fit + 1e-12) {
            best_fit = f;
            best = a;
        }
    }
    return best;
}

std::vector<SoloLeg> no_sharing_day(const std::vector<DayRider>& agents, const GridWorld& g) {
    std::vector<SoloLeg> out;
    out.reserve(agents.size());
    for (const DayRider& a : agents) {
        SoloLeg leg;
        leg.id = a.id;
        leg.distance_km = g.distance(a.trip.origin, a.trip.destination);
        leg.time_min = leg.distance_km / kSpeedKmh * 60.0;
        out.push_back(leg);
    }
    return out;
}

} // namespace ars
