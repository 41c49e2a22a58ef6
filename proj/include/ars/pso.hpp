#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ars/economy.hpp"
#include "ars/grid.hpp"
#include "ars/rng.hpp"

namespace ars {

// One day's matching instance: drivers with trips and capacities, riders with
// trips and start-of-day altruism scores.
struct DayDriver {
    int id = -1;
    TripSpec trip;
    std::size_t capacity = 4;
};

struct DayRider {
    int id = -1;
    TripSpec trip;
    Score01 score = 0.0;
};

struct DayState {
    const GridWorld* grid = nullptr;
    std::vector<DayDriver> drivers;
    std::vector<DayRider> riders;
    double tolerance_mult = 1.5;
    EconomyParams economy;
};

// Assignment of riders to drivers with per-driver ordered pickup lists.
struct Assignment {
    std::map<int, std::optional<int>> rider_to_driver;
    std::map<int, PickupSequence> driver_sequences;

    std::size_t matched_count() const;
};

// Capacity, at-most-once and the tolerance limit all hold.
bool assignment_valid(const Assignment& a, const DayState& day);

// alpha_r * sum of assigned riders' solo distances
//   - (1 - alpha_r) * total driver detour
//   + beta_pso * sum of per-match altruism points (economy driver gain).
double fitness(const Assignment& a, const DayState& day, double alpha_r, double beta_pso);

struct PsoParams {
    std::size_t swarm = 40;
    std::size_t iterations = 100;
    double inertia = 0.72;
    double cognitive = 1.49;
    double social = 1.49;
    double alpha_r = 0.5;
    double beta_pso = 1.0;
};

void validate(const PsoParams& p);

// One real gene per rider in [-1, driver_count): negative decodes to
// unassigned, floor(gene) to a driver index. Duplicate assignment is
// impossible by construction, so repair handles capacity and tolerance only.
struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> best_position;
    double best_fitness = 0.0;
};

struct Swarm {
    std::vector<Particle> particles;
    std::vector<double> gbest_position;
    double gbest_fitness = 0.0;
};

Assignment decode(const std::vector<double>& position, const DayState& day);

// Clamps out-of-range genes, evicts over-capacity riders (largest solo
// detour leaves first) and tolerance violators, and marks evicted riders
// unassigned. Valid particles pass through unchanged; idempotent.
void repair(Particle& p, const DayState& day);

// Particle 0 encodes the deterministic greedy proximity assignment (riders
// sorted by distance to their closest available driver; lower driver id wins
// ties); the rest are capacity-respecting random perturbations of it.
Swarm init_swarm(const DayState& day, const PsoParams& p, RngStream& rng);

// Velocity/position update with per-dimension r1, r2 ~ U(0,1), then repair
// and pbest/gbest refresh.
void pso_step(Swarm& swarm, const DayState& day, const PsoParams& p, RngStream& rng);

Assignment pso_solve(const DayState& day, const PsoParams& p, RngStream& rng);

// Exhaustive optimum over capacity- and tolerance-valid assignments and all
// per-driver pickup orders; ties resolve to the lexicographically smallest
// encoding. Guarded: riders <= 6, drivers <= 4.
Assignment brute_force_optimal(const DayState& day, double alpha_r, double beta_pso);

struct SoloLeg {
    int id = -1;
    double distance_km = 0.0;
    double time_min = 0.0;
};

inline constexpr double kSpeedKmh = 25.0;

// Everyone drives directly to their destination at 25 km/h.
std::vector<SoloLeg> no_sharing_day(const std::vector<DayRider>& agents, const GridWorld& g);

} // namespace ars
