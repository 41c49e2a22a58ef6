#include "ars/sim.hpp"
#include "ars/errors.hpp"
#include "ars/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ars {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

enum class RiderState : unsigned char { waiting, committed, aboard, done, solo, solo_done };

struct RiderDay {
    int id = -1;
    TripSpec trip;
    Score01 score0 = 0.0;
    int slot = -1;
    RiderState state = RiderState::waiting;
    int driver = -1;
    int pickup_time = -1;
    int finish_time = -1;
    int launch_time = -1;
    CellCoord pos;
    double solo_driven = 0.0;
    double onboard_km = 0.0;
    double traffic_benefit = 0.0;
};

struct DriverDay {
    int id = -1;
    TripSpec trip;
    Score01 score0 = 0.0;
    CellCoord pos;
    double travelled = 0.0;
    PickupSequence seq;
    std::size_t boarded = 0;
    std::vector<std::pair<CellCoord, int>> chain; // dropoff cell, rider id
    std::size_t dropped = 0;
    bool finished = false;
    int finish_time = -1;
    std::vector<int> aboard;
    double traffic_benefit = 0.0;
};

struct PendingGroup {
    std::vector<int> member_ids; // ego first, -1 pads
    std::vector<double> obs;
    std::vector<int> acts;
    std::vector<std::uint8_t> cur_mask;
    double reward = 0.0;
};

} // namespace

Simulation::Simulation(SimulationConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    kernels::select(cfg_.sim.kernels);
    if (cfg_.grid.distance_matrix.empty()) {
        grid_ = std::make_unique<GridWorld>(cfg_.grid.width, cfg_.grid.height,
                                            cfg_.grid.cell_km);
    } else {
        grid_ = std::make_unique<GridWorld>(GridWorld::load(cfg_.grid.distance_matrix));
    }
    theta_km_ = 0.15 * grid_->max_detour();

    if (cfg_.sim.trips_file.empty()) {
        RngStream pool_rng = substream(cfg_.sim.seed, "pool");
        pool_ = synthetic_trip_pool(*grid_, static_cast<std::size_t>(cfg_.sim.trip_pool),
                                    pool_rng);
    } else {
        pool_ = load_trips(cfg_.sim.trips_file, *grid_);
        if (pool_.empty()) throw InputError("trips file holds no usable trips");
    }

    RngStream init_rng = substream(cfg_.sim.seed, "init");
    init_roster(roster_, init_rng);
}

void Simulation::init_roster(std::vector<AgentRecord>& roster, RngStream& rng) const {
    const int n = cfg_.sim.agents;
    roster.assign(static_cast<std::size_t>(n), AgentRecord{});
    int initially_active = n;
    if (cfg_.sim.population == PopulationMode::birth_death) {
        initially_active = std::max(
            1, static_cast<int>(std::lround(cfg_.population.initial_active_fraction * n)));
        initially_active = std::min(initially_active, n);
    }
    for (int i = 0; i < n; ++i) {
        roster[i].id = i;
        roster[i].status = i < initially_active ? LifecycleStatus::active
                                                : LifecycleStatus::unenrolled;
    }
    for (int i = 0; i < initially_active; ++i) {
        if (cfg_.sim.init == InitDistribution::uniform) {
            roster[i].score = rng.uniform();
        } else {
            roster[i].score = std::clamp(
                rng.gaussian(cfg_.sim.gaussian_mean, cfg_.sim.gaussian_sd), 0.0, 1.0);
        }
    }
}

void Simulation::attach_policy(PolicyBundle bundle) {
    bundle_ = std::make_unique<PolicyBundle>(std::move(bundle));
}

PolicyBundle Simulation::train_policy() {
    const MarlConfig& mc = cfg_.marl;
    RngStream net_rng = substream(cfg_.sim.seed, "net-init");
    bundle_ = std::make_unique<PolicyBundle>(mc, static_cast<std::size_t>(cfg_.sim.agents),
                                             net_rng);
    MarlBuffer buf(mc);
    RngStream step_rng = substream(cfg_.sim.seed, "train-steps");

    const int episodes = std::max(0, mc.train_episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        const double frac = episodes > 1 ? static_cast<double>(ep) / (episodes - 1) : 1.0;
        const double explore = mc.explore_start + (mc.explore_end - mc.explore_start) * frac;

        std::vector<AgentRecord> scratch;
        RngStream ep_init = substream(cfg_.sim.seed, "train-init", static_cast<std::uint64_t>(ep));
        init_roster(scratch, ep_init);
        for (AgentRecord& a : scratch) a.status = LifecycleStatus::active;

        simulate_day(ep + 1, scratch, true, explore, tag_of("train"), &buf);

        for (int k = 0; k < mc.steps_per_episode; ++k) {
            if (buf.buffer.size() < mc.batch) break;
            train_step(*bundle_, buf, mc, step_rng);
        }
    }
    return *bundle_;
}

DayLog Simulation::run_day(int day) {
    DayLog log = simulate_day(day, roster_, false, 0.0, 0, nullptr);
    ledger_.days.push_back(log);
    for (const LifecycleEvent& e : log.events) ledger_.events.push_back(e);
    prev_day_dropouts_ = 0;
    for (const LifecycleEvent& e : log.events)
        if (e.kind == LifecycleEventKind::dropout) ++prev_day_dropouts_;
    prev_day_active_ = log.n_active;
    return log;
}

DayLog Simulation::simulate_day(int day, std::vector<AgentRecord>& roster, bool training_mode,
                                double explore_rate, std::uint64_t stream_salt,
                                MarlBuffer* buffer) {
    const GridWorld& g = *grid_;
    const std::uint64_t base = cfg_.sim.seed ^ stream_salt;
    const double tick_min = g.cell_km() / kSpeedKmh * 60.0;
    const double max_detour = g.max_detour();
    const std::size_t capacity = static_cast<std::size_t>(cfg_.sim.capacity);
    const double radius_km = cfg_.marl.pickup_radius_cells * g.cell_km();
    const double tol = 1.5;

    DayLog log;
    log.day = day;
    log.cell_vehicle_ticks.assign(static_cast<std::size_t>(g.cell_count()), 0.0);

    // population step (Alg. 3 UpdatePopulation), birth-death mode only
    if (!training_mode && cfg_.sim.population == PopulationMode::birth_death) {
        const double recent_rate =
            prev_day_active_ > 0 ? static_cast<double>(prev_day_dropouts_) / prev_day_active_
                                 : 0.0;
        RngStream pop_rng = substream(base, "population", static_cast<std::uint64_t>(day));
        PopulationStepResult step =
            step_population(roster, day, recent_rate, cfg_.population, pop_rng);
        log.events = std::move(step.events);
    }

    std::vector<int> active;
    std::map<int, Score01> scores;
    for (const AgentRecord& a : roster) {
        if (a.status == LifecycleStatus::active) {
            active.push_back(a.id);
            scores[a.id] = a.score;
        }
    }
    std::sort(active.begin(), active.end());
    log.n_active = static_cast<int>(active.size());
    if (active.empty()) return log;

    // roles and trips
    RngStream role_rng = substream(base, "roles", static_cast<std::uint64_t>(day));
    const RoleMap roles = assign_roles(active, scores, role_rng);

    RngStream trip_rng = substream(base, "trips", static_cast<std::uint64_t>(day));
    const std::vector<TripSpec> trips =
        stratified_sample(pool_, g, active.size(),
                          static_cast<std::size_t>(cfg_.sim.sample_bins), trip_rng);

    std::vector<DriverDay> drivers;
    std::vector<RiderDay> riders;
    for (std::size_t i = 0; i < active.size(); ++i) {
        const int id = active[i];
        if (roles.at(id) == Role::driver) {
            DriverDay d;
            d.id = id;
            d.trip = trips[i];
            d.score0 = scores[id];
            d.pos = d.trip.origin;
            drivers.push_back(std::move(d));
        } else {
            RiderDay r;
            r.id = id;
            r.trip = trips[i];
            r.score0 = scores[id];
            r.pos = r.trip.origin;
            riders.push_back(std::move(r));
        }
    }
    log.n_drivers = static_cast<int>(drivers.size());
    log.n_riders = static_cast<int>(riders.size());

    auto rider_of = [&](int id) -> RiderDay& {
        for (RiderDay& r : riders)
            if (r.id == id) return r;
        throw InternalError("unknown rider id in day instance");
    };

    std::map<int, double> deltas; // accumulated altruism updates, applied at day end
    double preclamp_sum = 0.0;

    auto rebuild_chain = [&](DriverDay& d) {
        d.chain.clear();
        const auto order = dropoff_order_indices(g, d.seq, d.trip.destination);
        for (std::size_t idx : order)
            d.chain.emplace_back(d.seq.stops[idx].dropoff, d.seq.stops[idx].rider_id);
    };

    // commit a rider to a driver; returns the marginal detour (clamped at
    // zero: the append rule guarantees nonnegativity up to FP rounding)
    auto commit = [&](DriverDay& d, RiderDay& r) {
        DriverQuery q{d.trip, d.pos, d.travelled, d.seq, d.boarded};
        const double marginal = std::max(0.0, append_detour(g, q, r.trip));
        d.seq.stops.push_back(PickupStop{r.id, r.trip.origin, r.trip.destination});
        rebuild_chain(d);
        r.state = RiderState::committed;
        r.driver = d.id;

        const double clamped = clamp_detour(marginal, max_detour);
        const double gain = driver_gain(r.score0, clamped, max_detour, cfg_.economy);
        const double cost = rider_cost(gain, cfg_.economy);
        deltas[d.id] += gain;
        deltas[r.id] += cost;
        preclamp_sum += gain + cost;

        const double solo = g.distance(r.trip.origin, r.trip.destination);
        const double shared = (solo - marginal) * 0.5;
        d.traffic_benefit += shared;
        r.traffic_benefit += shared;
        ++log.served_riders;
        return marginal;
    };

    // matcher-specific day setup
    const MatcherKind matcher = cfg_.sim.matcher;
    std::vector<int> slot_to_rider(cfg_.marl.rider_slots, -1);

    if (matcher == MatcherKind::pso) {
        DayState ds;
        ds.grid = &g;
        ds.tolerance_mult = tol;
        ds.economy = cfg_.economy;
        for (const DriverDay& d : drivers)
            ds.drivers.push_back(DayDriver{d.id, d.trip, capacity});
        for (const RiderDay& r : riders)
            ds.riders.push_back(DayRider{r.id, r.trip, r.score0});
        RngStream pso_rng = substream(base, "pso", static_cast<std::uint64_t>(day));
        const Assignment a = pso_solve(ds, cfg_.pso, pso_rng);
        for (DriverDay& d : drivers) {
            auto it = a.driver_sequences.find(d.id);
            if (it == a.driver_sequences.end() || it->second.empty()) continue;
            for (const PickupStop& s : it->second.stops) commit(d, rider_of(s.rider_id));
        }
        for (RiderDay& r : riders) {
            if (r.state == RiderState::waiting) {
                r.state = RiderState::solo;
                r.launch_time = 0;
            }
        }
    } else if (matcher == MatcherKind::none) {
        for (RiderDay& r : riders) {
            r.state = RiderState::solo;
            r.launch_time = 0;
        }
    } else {
        if (!bundle_)
            throw StateError("maddpg matcher requires a trained or attached policy");
        std::size_t slot = 0;
        for (RiderDay& r : riders) {
            if (slot < slot_to_rider.size()) {
                slot_to_rider[slot] = r.id;
                r.slot = static_cast<int>(slot);
                ++slot;
            } else {
                r.state = RiderState::solo; // beyond the slot cap: not in the book
                r.launch_time = 0;
            }
        }
    }

    RngStream act_rng = substream(base, "explore", static_cast<std::uint64_t>(day));

    const int diameter_cells = (g.width() - 1) + (g.height() - 1);
    const int tick_cap =
        static_cast<int>(std::lround(cfg_.sim.tick_cap_mult * std::max(1, diameter_cells)));

    auto driver_available = [&](const DriverDay& d) {
        if (d.finished) return false;
        if (d.seq.size() >= capacity) return false;
        const bool dropoff_phase = !d.seq.empty() && d.boarded == d.seq.size();
        return !dropoff_phase;
    };

    auto waiting_counts = [&]() {
        std::vector<int> counts(static_cast<std::size_t>(g.cell_count()), 0);
        for (const RiderDay& r : riders)
            if (r.state == RiderState::waiting) ++counts[g.cell_index(r.pos)];
        return counts;
    };

    auto feasible_for = [&](const DriverDay& d) {
        std::vector<RiderCandidate> candidates;
        for (const RiderDay& r : riders)
            if (r.state == RiderState::waiting && r.slot >= 0)
                candidates.push_back(RiderCandidate{r.id, r.trip});
        DriverQuery q{d.trip, d.pos, d.travelled, d.seq, d.boarded};
        return feasible_riders(g, q, candidates, radius_km, capacity, tol);
    };

    auto process_driver_events = [&](DriverDay& d, int time) {
        while (!d.finished) {
            if (d.boarded < d.seq.size()) {
                const PickupStop& next = d.seq.stops[d.boarded];
                if (!(d.pos == next.pickup)) break;
                RiderDay& r = rider_of(next.rider_id);
                r.state = RiderState::aboard;
                r.pickup_time = time;
                d.aboard.push_back(r.id);
                ++d.boarded;
                continue;
            }
            if (!d.seq.empty() && d.dropped < d.chain.size()) {
                const auto& [cell, rider_id] = d.chain[d.dropped];
                if (!(d.pos == cell)) break;
                RiderDay& r = rider_of(rider_id);
                r.state = RiderState::done;
                r.finish_time = time;
                d.aboard.erase(std::find(d.aboard.begin(), d.aboard.end(), rider_id));
                ++d.dropped;
                continue;
            }
            if (d.pos == d.trip.destination) {
                d.finished = true;
                d.finish_time = time;
            }
            break;
        }
    };

    auto driver_target = [&](const DriverDay& d) -> CellCoord {
        if (d.boarded < d.seq.size()) return d.seq.stops[d.boarded].pickup;
        if (!d.seq.empty() && d.dropped < d.chain.size()) return d.chain[d.dropped].first;
        return d.trip.destination;
    };

    auto all_done = [&]() {
        for (const DriverDay& d : drivers)
            if (!d.finished) return false;
        for (const RiderDay& r : riders)
            if (r.state != RiderState::done && r.state != RiderState::solo_done) return false;
        return true;
    };

    const std::size_t J = cfg_.marl.joint_agents;
    const std::size_t A = cfg_.marl.actions();
    std::vector<PendingGroup> pending;

    auto mask_now = [&](const DriverDay& d) {
        if (driver_available(d)) {
            return action_mask(slot_to_rider, feasible_for(d), cfg_.marl.rider_slots);
        }
        std::vector<std::uint8_t> decline_only(A, 0);
        decline_only[A - 1] = 1;
        return decline_only;
    };

    auto flush_pending = [&](bool day_over) {
        if (!buffer) {
            pending.clear();
            return;
        }
        const auto counts = waiting_counts();
        for (PendingGroup& pg : pending) {
            GroupTransition t;
            t.group_ids = pg.member_ids;
            t.cur_mask = pg.cur_mask;
            t.entry.obs = pg.obs;
            t.entry.act = pg.acts;
            t.entry.reward = pg.reward;
            t.entry.done = day_over ? 1 : 0;
            t.entry.next_obs.assign(J * kObsDim, 0.0);
            t.entry.next_mask.assign(J * A, 0);
            if (!day_over) {
                for (std::size_t k = 0; k < J; ++k) {
                    if (pg.member_ids[k] < 0) continue;
                    const DriverDay* dd = nullptr;
                    for (const DriverDay& d : drivers)
                        if (d.id == pg.member_ids[k]) dd = &d;
                    if (!dd) continue;
                    const auto obs = build_observation(g, dd->pos, true, counts);
                    std::copy(obs.begin(), obs.end(), t.entry.next_obs.begin() + k * kObsDim);
                    const auto m = mask_now(*dd);
                    std::copy(m.begin(), m.end(), t.entry.next_mask.begin() + k * A);
                }
            }
            buffer->push(std::move(t));
        }
        pending.clear();
    };

    int time = 0;
    bool anomaly = false;

    while (true) {
        for (DriverDay& d : drivers) process_driver_events(d, time);

        if (all_done()) break;
        if (time >= tick_cap) {
            anomaly = true;
            ++log.anomalies;
            break;
        }

        flush_pending(false);

        // release waiting riders once nobody can pick anyone up any more
        {
            bool any_available = false;
            for (const DriverDay& d : drivers) any_available = any_available || driver_available(d);
            if (!any_available) {
                for (RiderDay& r : riders) {
                    if (r.state == RiderState::waiting) {
                        r.state = RiderState::solo;
                        r.launch_time = time;
                    }
                }
            }
        }

        // decision phase (policy matcher only)
        if (matcher == MatcherKind::maddpg) {
            struct Decision {
                int driver_id;
                CellCoord pos;
                std::vector<double> obs;
                std::vector<std::uint8_t> mask;
                int act;
                double reward;
            };
            std::vector<Decision> decisions;
            for (DriverDay& d : drivers) {
                if (!driver_available(d)) continue;
                const auto feasible = feasible_for(d);
                if (feasible.empty()) continue;
                const auto counts = waiting_counts();
                const auto obs = build_observation(g, d.pos, true, counts);
                const auto mask = action_mask(slot_to_rider, feasible, cfg_.marl.rider_slots);
                const int act =
                    select_action(bundle_->actor(d.id), obs, mask, explore_rate, act_rng);
                double reward = 0.0;
                if (act >= 0 && static_cast<std::size_t>(act) < cfg_.marl.rider_slots) {
                    RiderDay& r = rider_of(slot_to_rider[act]);
                    const double solo = g.distance(r.trip.origin, r.trip.destination);
                    const double marginal = commit(d, r);
                    const double clamped = clamp_detour(marginal, max_detour);
                    const double gain =
                        driver_gain(r.score0, clamped, max_detour, cfg_.economy);
                    reward = decision_reward(solo, marginal, theta_km_, gain, max_detour,
                                             cfg_.marl);
                }
                decisions.push_back(Decision{d.id, d.pos, obs, mask, act, reward});
            }

            if (buffer && !decisions.empty()) {
                for (std::size_t i = 0; i < decisions.size(); ++i) {
                    PendingGroup pg;
                    pg.member_ids.assign(J, -1);
                    pg.obs.assign(J * kObsDim, 0.0);
                    pg.acts.assign(J, -1);
                    pg.cur_mask.assign(J * A, 0);
                    pg.reward = decisions[i].reward;

                    // ego first, then nearest co-deciders
                    std::vector<std::size_t> order;
                    for (std::size_t k = 0; k < decisions.size(); ++k)
                        if (k != i) order.push_back(k);
                    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                        const int da = std::abs(decisions[a].pos.x - decisions[i].pos.x) +
                                       std::abs(decisions[a].pos.y - decisions[i].pos.y);
                        const int db = std::abs(decisions[b].pos.x - decisions[i].pos.x) +
                                       std::abs(decisions[b].pos.y - decisions[i].pos.y);
                        if (da != db) return da < db;
                        return decisions[a].driver_id < decisions[b].driver_id;
                    });
                    std::vector<std::size_t> members{i};
                    for (std::size_t k = 0; k < order.size() && members.size() < J; ++k)
                        members.push_back(order[k]);

                    for (std::size_t k = 0; k < members.size(); ++k) {
                        const Decision& dec = decisions[members[k]];
                        pg.member_ids[k] = dec.driver_id;
                        std::copy(dec.obs.begin(), dec.obs.end(), pg.obs.begin() + k * kObsDim);
                        pg.acts[k] = dec.act;
                        std::copy(dec.mask.begin(), dec.mask.end(),
                                  pg.cur_mask.begin() + k * A);
                    }
                    pending.push_back(std::move(pg));
                }
            }
        }

        // movement phase
        int moving = 0;
        int aboard = 0;
        for (const DriverDay& d : drivers) {
            if (d.finished) continue;
            ++moving;
            aboard += static_cast<int>(d.aboard.size());
        }
        log.moving_drivers.push_back(moving);
        log.riders_in_vehicle.push_back(aboard);

        for (DriverDay& d : drivers) {
            if (d.finished) continue;
            const CellCoord target = driver_target(d);
            const CellCoord next = step_toward(g, d.pos, target);
            d.travelled += g.distance(d.pos, next);
            for (int rid : d.aboard) rider_of(rid).onboard_km += g.distance(d.pos, next);
            d.pos = next;
            log.cell_vehicle_ticks[g.cell_index(d.pos)] += 1.0;
            process_driver_events(d, time + 1);
        }
        for (RiderDay& r : riders) {
            if (r.state != RiderState::solo) continue;
            const CellCoord next = step_toward(g, r.pos, r.trip.destination);
            r.solo_driven += g.distance(r.pos, next);
            r.pos = next;
            log.cell_vehicle_ticks[g.cell_index(r.pos)] += 1.0;
            if (r.pos == r.trip.destination) {
                r.state = RiderState::solo_done;
                r.finish_time = time + 1;
            }
        }

        ++time;
    }

    if (anomaly) {
        // forced direct-to-destination completion
        for (DriverDay& d : drivers) {
            if (d.finished) continue;
            d.travelled += g.distance(d.pos, d.trip.destination);
            for (int rid : d.aboard) {
                RiderDay& r = rider_of(rid);
                r.onboard_km += g.distance(d.pos, r.trip.destination);
                r.state = RiderState::done;
                r.finish_time = time;
            }
            d.aboard.clear();
            d.boarded = d.seq.size();
            d.dropped = d.chain.size();
            d.pos = d.trip.destination;
            d.finished = true;
            d.finish_time = time;
        }
        for (RiderDay& r : riders) {
            if (r.state == RiderState::done || r.state == RiderState::solo_done) continue;
            if (r.state == RiderState::committed || r.state == RiderState::waiting) {
                r.solo_driven += g.distance(r.pos, r.trip.destination);
                if (r.state == RiderState::committed) --log.served_riders;
            } else if (r.state == RiderState::solo) {
                r.solo_driven += g.distance(r.pos, r.trip.destination);
            }
            r.state = RiderState::solo_done;
            r.finish_time = time + static_cast<int>(std::lround(
                                       g.distance(r.pos, r.trip.destination) / g.cell_km()));
        }
    }
    flush_pending(true);
    log.ticks = time;

    // altruism updates applied once, at day end
    for (const auto& [id, delta] : deltas) {
        for (AgentRecord& a : roster)
            if (a.id == id) a.score = apply_update(a.score, delta);
    }
    if (std::abs(cfg_.economy.beta_s - 1.0) < 1e-12 && std::abs(preclamp_sum) > 1e-9)
        throw InternalError("economy conservation violated before clamping");

    double mean = 0.0, var = 0.0;
    {
        std::vector<double> vals;
        for (const AgentRecord& a : roster)
            if (a.status == LifecycleStatus::active) vals.push_back(a.score);
        if (!vals.empty()) {
            mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
            for (double v : vals) var += (v - mean) * (v - mean);
            var /= vals.size();
        }
    }
    log.altruism_mean = mean;
    log.altruism_std = std::sqrt(var);

    // per-agent rows, ascending id
    for (const DriverDay& d : drivers) {
        AgentDayRow row;
        row.agent_id = d.id;
        row.role = Role::driver;
        row.direct_km = g.distance(d.trip.origin, d.trip.destination);
        row.driven_km = d.travelled;
        row.trip_min = d.finish_time >= 0 ? d.finish_time * tick_min : time * tick_min;
        row.detour_km = std::max(0.0, d.travelled - row.direct_km);
        row.personal_benefit = row.direct_km - row.driven_km;
        row.traffic_benefit = d.traffic_benefit;
        if (!anomaly && d.travelled > tol * row.direct_km + 1e-6)
            throw InternalError("driver route exceeded the tolerance limit (day " +
                                std::to_string(day) + ", agent " + std::to_string(d.id) + ")");
        log.rows.push_back(row);
    }
    for (const RiderDay& r : riders) {
        AgentDayRow row;
        row.agent_id = r.id;
        row.role = Role::rider;
        row.served = r.state == RiderState::done;
        row.direct_km = g.distance(r.trip.origin, r.trip.destination);
        row.driven_km = r.solo_driven;
        row.onboard_km = r.onboard_km;
        row.trip_min = r.finish_time >= 0 ? r.finish_time * tick_min : time * tick_min;
        row.personal_benefit = row.direct_km - row.driven_km;
        row.traffic_benefit = r.traffic_benefit;
        log.rows.push_back(row);
    }
    std::sort(log.rows.begin(), log.rows.end(),
              [](const AgentDayRow& a, const AgentDayRow& b) { return a.agent_id < b.agent_id; });

    return log;
}

SimulationReport Simulation::run() {
    if (cfg_.sim.matcher == MatcherKind::maddpg && !bundle_) {
        if (!cfg_.sim.checkpoint.empty()) {
            attach_policy(PolicyBundle::load(cfg_.sim.checkpoint, cfg_.marl));
        } else {
            train_policy();
        }
    }
    ledger_.days.clear();
    ledger_.events.clear();
    prev_day_dropouts_ = 0;
    prev_day_active_ = 0;
    for (int day = 1; day <= cfg_.sim.days; ++day) run_day(day);

    SimulationReport report = build_report(ledger_, cfg_);
    for (const AgentRecord& a : roster_) report.final_scores.push_back(a.score);

    std::ostringstream manifest;
    manifest << "version " << kVersion << "\n";
    manifest << "seed " << cfg_.sim.seed << "\n";
    manifest << "config_hash " << std::hex << config_hash(cfg_) << std::dec << "\n";
    manifest << "kernels " << kernels::active().name << "\n";
    if (!cfg_.sim.checkpoint.empty()) manifest << "checkpoint " << cfg_.sim.checkpoint << "\n";
    manifest << "config:\n" << dump_config(cfg_) << "\n";
    report.manifest = manifest.str();
    return report;
}

namespace {

double day_system_distance(const DayLog& log, bool include_unserved) {
    double sum = 0.0;
    for (const AgentDayRow& row : log.rows) {
        if (row.role == Role::driver) sum += row.driven_km;
        else if (!row.served && include_unserved) sum += row.driven_km;
    }
    return sum;
}

} // namespace

SimulationReport build_report(const MetricsLedger& ledger, const SimulationConfig& cfg) {
    SimulationReport report;
    report.ledger = ledger;
    const std::vector<DayLog>& logs = ledger.days;
    const bool include_unserved = cfg.sim.unserved_solo;

    report.distance = total_distance_and_co2(logs, cfg.metrics.emission_kg_per_km,
                                             include_unserved);
    report.detour = detour_factor(logs);

    double util_sum = 0.0;
    std::size_t util_days = 0;
    double acc_sum = 0.0;
    std::size_t acc_days = 0;
    std::vector<double> ratio_series;
    for (const DayLog& log : logs) {
        const UtilizationDay util = vehicle_utilization(log);
        if (util.mean) {
            util_sum += *util.mean;
            ++util_days;
        }
        if (const auto rate = acceptance_rate(log)) {
            acc_sum += *rate;
            ++acc_days;
        }
        if (log.n_riders > 0)
            ratio_series.push_back(static_cast<double>(log.n_drivers) / log.n_riders);
        report.anomalies += log.anomalies;
    }
    if (util_days) report.mean_utilization = util_sum / util_days;
    if (acc_days) report.mean_acceptance = acc_sum / acc_days;
    if (ratio_series.size() >= 2)
        report.ratio = ratio_confidence_interval(ratio_series);

    const int cells = logs.empty() ? cfg.grid.width * cfg.grid.height
                                   : static_cast<int>(logs.front().cell_vehicle_ticks.size());
    report.density = traffic_density(logs, cells, cfg.metrics.density_threshold);

    const BenefitVectors benefits = accumulate_benefits(logs);
    if (!benefits.personal.empty())
        report.lorenz = lorenz_and_gini(benefits.personal, benefits.community,
                                        cfg.metrics.lorenz_grid);
    report.reintegration = reintegration_score(ledger.events, cfg.metrics.reintegration);

    // ---- tables ----
    auto& tables = report.tables;
    {
        std::ostringstream t;
        t << "# day distance\n";
        for (const DayLog& log : logs)
            t << log.day << ' ' << fmt(day_system_distance(log, include_unserved)) << '\n';
        tables["distance.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day mean std\n";
        for (const DayLog& log : logs) {
            double mean = 0.0, var = 0.0;
            if (!log.rows.empty()) {
                std::vector<double> v;
                for (const AgentDayRow& row : log.rows) {
                    double own = row.role == Role::driver ? row.driven_km
                                 : (!row.served && include_unserved ? row.driven_km : 0.0);
                    v.push_back(own);
                }
                mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
                for (double x : v) var += (x - mean) * (x - mean);
                var /= v.size();
            }
            t << log.day << ' ' << fmt(mean) << ' ' << fmt(std::sqrt(var)) << '\n';
        }
        tables["agent_distance.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day time\n";
        for (const DayLog& log : logs) t << log.day << ' ' << fmt(avg_trip_time(log)) << '\n';
        tables["trip_time.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day utilization\n";
        for (const DayLog& log : logs) {
            const UtilizationDay util = vehicle_utilization(log);
            if (util.mean) t << log.day << ' ' << fmt(*util.mean) << '\n';
        }
        tables["vehicle_utilization.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day mean std\n";
        for (const DayLog& log : logs)
            t << log.day << ' ' << fmt(log.altruism_mean) << ' ' << fmt(log.altruism_std)
              << '\n';
        tables["altruism.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day mean std\n";
        for (const DayLog& log : logs) {
            double mean = 1.0, var = 0.0;
            std::vector<double> v;
            for (const AgentDayRow& row : log.rows)
                if (row.role == Role::driver && row.direct_km > 0.0)
                    v.push_back(row.driven_km / row.direct_km);
            if (!v.empty()) {
                mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
                for (double x : v) var += (x - mean) * (x - mean);
                var /= v.size();
            }
            t << log.day << ' ' << fmt(mean) << ' ' << fmt(std::sqrt(var)) << '\n';
        }
        tables["detour_factor.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day rate\n";
        for (const DayLog& log : logs)
            if (const auto rate = acceptance_rate(log))
                t << log.day << ' ' << fmt(*rate) << '\n';
        tables["acceptance_rate.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day ratio\n";
        for (const DayLog& log : logs)
            if (log.n_riders > 0)
                t << log.day << ' '
                  << fmt(static_cast<double>(log.n_drivers) / log.n_riders) << '\n';
        tables["driver_rider_ratio.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day active\n";
        for (const DayLog& log : logs) t << log.day << ' ' << log.n_active << '\n';
        tables["active_agents.dat"] = t.str();
    }
    {
        std::ostringstream t;
        int width = cfg.grid.width;
        int height = cfg.grid.height;
        if (static_cast<std::size_t>(width) * height != report.density.density.size()) {
            width = static_cast<int>(report.density.density.size());
            height = width > 0 ? 1 : 0;
        }
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                t << fmt(report.density.density[idx]) << (x + 1 == width ? '\n' : ' ');
            }
        }
        tables["density_map.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# pop_share benefit_share\n";
        for (std::size_t i = 0; i < report.lorenz.distance.population_share.size(); ++i)
            t << fmt(report.lorenz.distance.population_share[i]) << ' '
              << fmt(report.lorenz.distance.benefit_share[i]) << '\n';
        tables["lorenz_distance.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# pop_share benefit_share\n";
        for (std::size_t i = 0; i < report.lorenz.traffic.population_share.size(); ++i)
            t << fmt(report.lorenz.traffic.population_share[i]) << ' '
              << fmt(report.lorenz.traffic.benefit_share[i]) << '\n';
        tables["lorenz_traffic.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# u v share\n";
        const auto& s = report.lorenz.surface;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s[i].size(); ++j)
                t << fmt(static_cast<double>(i) / (s.size() - 1)) << ' '
                  << fmt(static_cast<double>(j) / (s[i].size() - 1)) << ' ' << fmt(s[i][j])
                  << '\n';
        tables["lorenz_surface.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# basic time quick stable reint avg_return_days dropouts returns\n";
        const ReintegrationScore& r = report.reintegration;
        if (r.reint) {
            t << fmt(r.r_basic) << ' ' << fmt(r.r_time) << ' ' << fmt(r.r_quick) << ' '
              << fmt(r.r_stable) << ' ' << fmt(*r.reint) << ' ' << fmt(r.avg_return_days)
              << ' ' << r.dropouts << ' ' << r.returns << '\n';
        } else {
            t << "# not applicable: no dropout events\n";
        }
        tables["reintegration.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# mean sd cv ci_low ci_high\n";
        if (report.ratio)
            t << fmt(report.ratio->mean) << ' ' << fmt(report.ratio->sd) << ' '
              << fmt(report.ratio->cv) << ' ' << fmt(report.ratio->ci_low) << ' '
              << fmt(report.ratio->ci_high) << '\n';
        tables["ratio_stats.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "# day kind agent\n";
        for (const LifecycleEvent& e : ledger.events) {
            const char* kind = e.kind == LifecycleEventKind::dropout   ? "dropout"
                               : e.kind == LifecycleEventKind::returned ? "return"
                                                                        : "birth";
            t << e.day << ' ' << kind << ' ' << e.agent_id << '\n';
        }
        tables["events.dat"] = t.str();
    }
    {
        std::ostringstream t;
        t << "total_distance_km " << fmt(report.distance.distance_km) << '\n';
        t << "co2_kg " << fmt(report.distance.co2_kg) << '\n';
        t << "mean_detour_factor " << fmt(report.detour.mean) << '\n';
        if (report.mean_utilization)
            t << "mean_utilization " << fmt(*report.mean_utilization) << '\n';
        if (report.mean_acceptance)
            t << "mean_acceptance " << fmt(*report.mean_acceptance) << '\n';
        t << "dense_cells " << report.density.dense_cells << '\n';
        t << "gini_distance " << fmt(report.lorenz.gini_distance) << '\n';
        t << "gini_traffic " << fmt(report.lorenz.gini_traffic) << '\n';
        if (report.reintegration.reint)
            t << "reintegration " << fmt(*report.reintegration.reint) << '\n';
        if (report.ratio) t << "ratio_ci_low " << fmt(report.ratio->ci_low) << '\n';
        t << "anomalies " << report.anomalies << '\n';
        tables["summary.txt"] = t.str();
    }
    return report;
}

void write_report(const SimulationReport& report, const std::string& out_dir,
                  bool save_daylogs) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const auto& [name, contents] : report.tables) {
        std::ofstream out(fs::path(out_dir) / name);
        if (!out) throw InputError("cannot write output file: " + name);
        out << contents;
    }
    {
        std::ofstream out(fs::path(out_dir) / "manifest.txt");
        out << report.manifest;
    }
    {
        std::ofstream out(fs::path(out_dir) / "final_altruism.dat");
        out << "# agent score\n";
        for (std::size_t i = 0; i < report.final_scores.size(); ++i)
            out << i << ' ' << fmt(report.final_scores[i]) << '\n';
    }
    if (save_daylogs) {
        const int cells = report.ledger.days.empty()
                              ? 0
                              : static_cast<int>(report.ledger.days.front().cell_vehicle_ticks.size());
        std::ofstream out(fs::path(out_dir) / "daylogs.dat");
        out << serialize_daylogs(report.ledger, cells);
    }
}

std::string serialize_daylogs(const MetricsLedger& ledger, int cell_count) {
    std::ostringstream out;
    out << "# ars-daylog v1\n";
    out << "cells " << cell_count << '\n';
    for (const DayLog& log : ledger.days) {
        out << "day " << log.day << '\n';
        out << "meta " << log.n_active << ' ' << log.n_drivers << ' ' << log.n_riders << ' '
            << log.served_riders << ' ' << log.ticks << ' ' << log.anomalies << ' '
            << fmt17(log.altruism_mean) << ' ' << fmt17(log.altruism_std) << '\n';
        out << "rows " << log.rows.size() << '\n';
        for (const AgentDayRow& r : log.rows) {
            out << r.agent_id << ' ' << (r.role == Role::driver ? 0 : 1) << ' '
                << (r.served ? 1 : 0) << ' ' << fmt17(r.direct_km) << ' '
                << fmt17(r.driven_km) << ' ' << fmt17(r.onboard_km) << ' '
                << fmt17(r.trip_min) << ' ' << fmt17(r.detour_km) << ' '
                << fmt17(r.personal_benefit) << ' ' << fmt17(r.traffic_benefit) << '\n';
        }
        out << "series " << log.moving_drivers.size() << '\n';
        for (std::size_t t = 0; t < log.moving_drivers.size(); ++t)
            out << log.moving_drivers[t] << ' ' << log.riders_in_vehicle[t] << '\n';
        out << "gridticks " << log.cell_vehicle_ticks.size() << '\n';
        for (std::size_t c = 0; c < log.cell_vehicle_ticks.size(); ++c)
            out << fmt17(log.cell_vehicle_ticks[c])
                << (c + 1 == log.cell_vehicle_ticks.size() ? '\n' : ' ');
        if (log.cell_vehicle_ticks.empty()) out << '\n';
        out << "events " << log.events.size() << '\n';
        for (const LifecycleEvent& e : log.events)
            out << static_cast<int>(e.kind) << ' ' << e.agent_id << ' ' << e.day << '\n';
    }
    out << "end\n";
    return out.str();
}

MetricsLedger parse_daylogs(const std::string& text) {
    std::istringstream in(text);
    MetricsLedger ledger;
    std::string tok;
    int cells = 0;

    std::string line;
    if (!std::getline(in, line) || line.rfind("# ars-daylog", 0) != 0)
        throw InputError("not a day-log file (bad header)");
    in >> tok >> cells;
    if (tok != "cells") throw InputError("day-log file: expected cell count");

    while (in >> tok) {
        if (tok == "end") break;
        if (tok != "day") throw InputError("day-log file: expected 'day'");
        DayLog log;
        in >> log.day;
        in >> tok;
        if (tok != "meta") throw InputError("day-log file: expected 'meta'");
        in >> log.n_active >> log.n_drivers >> log.n_riders >> log.served_riders >>
            log.ticks >> log.anomalies >> log.altruism_mean >> log.altruism_std;
        std::size_t n = 0;
        in >> tok >> n;
        if (tok != "rows") throw InputError("day-log file: expected 'rows'");
        for (std::size_t i = 0; i < n; ++i) {
            AgentDayRow r;
            int role = 0, served = 0;
            in >> r.agent_id >> role >> served >> r.direct_km >> r.driven_km >>
                r.onboard_km >> r.trip_min >> r.detour_km >> r.personal_benefit >>
                r.traffic_benefit;
            r.role = role == 0 ? Role::driver : Role::rider;
            r.served = served != 0;
            log.rows.push_back(r);
        }
        in >> tok >> n;
        if (tok != "series") throw InputError("day-log file: expected 'series'");
        log.moving_drivers.resize(n);
        log.riders_in_vehicle.resize(n);
        for (std::size_t t = 0; t < n; ++t)
            in >> log.moving_drivers[t] >> log.riders_in_vehicle[t];
        in >> tok >> n;
        if (tok != "gridticks") throw InputError("day-log file: expected 'gridticks'");
        log.cell_vehicle_ticks.resize(n);
        for (std::size_t c = 0; c < n; ++c) in >> log.cell_vehicle_ticks[c];
        in >> tok >> n;
        if (tok != "events") throw InputError("day-log file: expected 'events'");
        for (std::size_t i = 0; i < n; ++i) {
            int kind = 0;
            LifecycleEvent e{LifecycleEventKind::dropout, -1, 0};
            in >> kind >> e.agent_id >> e.day;
            e.kind = static_cast<LifecycleEventKind>(kind);
            log.events.push_back(e);
            ledger.events.push_back(e);
        }
        if (!in) throw InputError("day-log file truncated");
        ledger.days.push_back(std::move(log));
    }
    return ledger;
}

} // namespace ars
