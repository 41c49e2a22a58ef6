#include "ars/grid.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ars {

bool PickupSequence::contains(int rider_id) const {
    return std::any_of(stops.begin(), stops.end(),
                       [&](const PickupStop& s) { return s.rider_id == rider_id; });
}

GridWorld::GridWorld(int width, int height, double cell_km)
    : width_(width), height_(height), cell_km_(cell_km) {
    if (width < 1 || height < 1)
        throw InputError("grid dimensions must be at least 1x1");
    if (!(cell_km > 0.0) || !std::isfinite(cell_km))
        throw InputError("cell_km must be finite and positive");
    const int n = width_ * height_;
    dist_.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        const int ax = i % width_, ay = i / width_;
        for (int j = 0; j < n; ++j) {
            const int bx = j % width_, by = j / width_;
            dist_[static_cast<std::size_t>(i) * n + j] =
                (std::abs(ax - bx) + std::abs(ay - by)) * cell_km_;
        }
    }
    compute_max_detour();
}

GridWorld GridWorld::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open distance-matrix file: " + path);
    GridWorld g;
    if (!(in >> g.width_ >> g.height_ >> g.cell_km_))
        throw InputError("distance-matrix header must be 'width height cell_km': " + path);
    if (g.width_ < 1 || g.height_ < 1 || !(g.cell_km_ > 0.0))
        throw InputError("distance-matrix header values out of range: " + path);
    const std::size_t n = static_cast<std::size_t>(g.width_) * g.height_;
    g.dist_.resize(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        if (!(in >> g.dist_[i]))
            throw InputError("distance-matrix file truncated: " + path);
    }
    g.validate();
    g.compute_max_detour();
    return g;
}

void GridWorld::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write distance-matrix file: " + path);
    out << width_ << ' ' << height_ << ' ' << cell_km_ << '\n';
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", dist_[i * n + j]);
            out << buf << (j + 1 == n ? '\n' : ' ');
        }
    }
}

void GridWorld::validate() const {
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    for (std::size_t i = 0; i < n; ++i) {
        if (dist_[i * n + i] != 0.0)
            throw InputError("distance matrix has nonzero diagonal entry");
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dist_[i * n + j];
            if (!std::isfinite(d) || d < 0.0)
                throw InputError("distance matrix has negative or non-finite entry");
            if (std::abs(d - dist_[j * n + i]) > 1e-9)
                throw InputError("distance matrix is not symmetric");
        }
    }
}

void GridWorld::compute_max_detour() {
    max_detour_ = 0.0;
    for (double d : dist_) max_detour_ = std::max(max_detour_, d);
}

double GridWorld::distance(CellCoord a, CellCoord b) const {
    if (!in_bounds(a) || !in_bounds(b))
        throw InputError("cell coordinate out of grid bounds");
    return dist_[static_cast<std::size_t>(cell_index(a)) * cell_count() + cell_index(b)];
}

double cell_distance(const GridWorld& g, CellCoord a, CellCoord b) {
    return g.distance(a, b);
}

namespace {

double chain_length(const GridWorld& g, CellCoord start,
                    const std::vector<CellCoord>& stops, CellCoord dest) {
    double len = 0.0;
    CellCoord cur = start;
    for (const CellCoord& c : stops) {
        len += g.distance(cur, c);
        cur = c;
    }
    return len + g.distance(cur, dest);
}

// Insert `stop` into `chain` at the position minimizing start->chain->dest
// length; ties resolve to the earliest position. By the triangle inequality
// the insertion never shortens the chain, which keeps detours nonnegative.
void cheapest_insert(const GridWorld& g, CellCoord start, std::vector<CellCoord>& chain,
                     CellCoord stop, CellCoord dest) {
    std::size_t best_pos = 0;
    double best_len = std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos <= chain.size(); ++pos) {
        std::vector<CellCoord> trial = chain;
        trial.insert(trial.begin() + static_cast<std::ptrdiff_t>(pos), stop);
        const double len = chain_length(g, start, trial, dest);
        if (len < best_len - 1e-12) {
            best_len = len;
            best_pos = pos;
        }
    }
    chain.insert(chain.begin() + static_cast<std::ptrdiff_t>(best_pos), stop);
}

std::vector<CellCoord> build_dropoff_chain(const GridWorld& g, const PickupSequence& seq,
                                           CellCoord destination) {
    std::vector<CellCoord> chain;
    for (const PickupStop& s : seq.stops)
        cheapest_insert(g, s.pickup, chain, s.dropoff, destination);
    return chain;
}

} // namespace

std::vector<CellCoord> dropoff_order(const GridWorld& g, const PickupSequence& seq,
                                     CellCoord destination) {
    return build_dropoff_chain(g, seq, destination);
}

std::vector<std::size_t> dropoff_order_indices(const GridWorld& g, const PickupSequence& seq,
                                               CellCoord destination) {
    // replay the incremental cheapest insertion, carrying stop indices
    std::vector<std::size_t> order;
    std::vector<CellCoord> chain;
    for (std::size_t j = 0; j < seq.stops.size(); ++j) {
        const CellCoord start = seq.stops[j].pickup;
        const CellCoord stop = seq.stops[j].dropoff;
        std::size_t best_pos = 0;
        double best_len = std::numeric_limits<double>::infinity();
        for (std::size_t pos = 0; pos <= chain.size(); ++pos) {
            std::vector<CellCoord> trial = chain;
            trial.insert(trial.begin() + static_cast<std::ptrdiff_t>(pos), stop);
            const double len = chain_length(g, start, trial, destination);
            if (len < best_len - 1e-12) {
                best_len = len;
                best_pos = pos;
            }
        }
        chain.insert(chain.begin() + static_cast<std::ptrdiff_t>(best_pos), stop);
        order.insert(order.begin() + static_cast<std::ptrdiff_t>(best_pos), j);
    }
    return order;
}

double route_length(const GridWorld& g, const TripSpec& driver, const PickupSequence& seq) {
    if (seq.empty()) return g.distance(driver.origin, driver.destination);

    double len = 0.0;
    CellCoord cur = driver.origin;
    for (const PickupStop& s : seq.stops) {
        len += g.distance(cur, s.pickup);
        cur = s.pickup;
    }
    const auto chain = build_dropoff_chain(g, seq, driver.destination);
    return len + chain_length(g, cur, chain, driver.destination);
}

double detour(const GridWorld& g, const TripSpec& driver, const PickupSequence& seq,
              const TripSpec& rider, std::size_t capacity) {
    if (seq.size() >= capacity)
        throw ContractViolation("detour: pickup sequence already at capacity");
    PickupSequence appended = seq;
    appended.stops.push_back(PickupStop{-1, rider.origin, rider.destination});
    return route_length(g, driver, appended) - route_length(g, driver, seq);
}

double remaining_route_length(const GridWorld& g, const DriverQuery& q) {
    if (q.boarded > q.seq.size())
        throw ContractViolation("remaining_route_length: boarded exceeds sequence size");
    double len = 0.0;
    CellCoord cur = q.pos;
    for (std::size_t i = q.boarded; i < q.seq.stops.size(); ++i) {
        len += g.distance(cur, q.seq.stops[i].pickup);
        cur = q.seq.stops[i].pickup;
    }
    const auto chain = build_dropoff_chain(g, q.seq, q.trip.destination);
    return len + chain_length(g, cur, chain, q.trip.destination);
}

double remaining_route_length(const GridWorld& g, CellCoord pos,
                              const std::vector<PickupStop>& pending,
                              const std::vector<CellCoord>& chain, CellCoord destination) {
    double len = 0.0;
    CellCoord cur = pos;
    for (const PickupStop& s : pending) {
        len += g.distance(cur, s.pickup);
        cur = s.pickup;
    }
    return len + chain_length(g, cur, chain, destination);
}

void insert_dropoff(const GridWorld& g, CellCoord start, std::vector<CellCoord>& chain,
                    CellCoord dropoff, CellCoord destination) {
    cheapest_insert(g, start, chain, dropoff, destination);
}

double append_detour(const GridWorld& g, const DriverQuery& q, const TripSpec& rider) {
    DriverQuery with = q;
    with.seq.stops.push_back(PickupStop{-1, rider.origin, rider.destination});
    return remaining_route_length(g, with) - remaining_route_length(g, q);
}

std::vector<int> feasible_riders(const GridWorld& g, const DriverQuery& q,
                                 const std::vector<RiderCandidate>& riders,
                                 double radius_km, std::size_t capacity,
                                 double tolerance_mult) {
    if (radius_km < 0.0) throw ContractViolation("feasible_riders: negative radius");
    std::vector<int> out;
    if (q.seq.size() >= capacity) return out;

    const double solo = g.distance(q.trip.origin, q.trip.destination);
    const double budget = tolerance_mult * solo + 1e-9;

    for (const RiderCandidate& r : riders) {
        if (q.seq.contains(r.id)) continue;
        if (g.distance(q.pos, r.trip.origin) > radius_km + 1e-9) continue;

        DriverQuery with = q;
        with.seq.stops.push_back(PickupStop{r.id, r.trip.origin, r.trip.destination});
        const double total = q.travelled_km + remaining_route_length(g, with);
        if (total <= budget) out.push_back(r.id);
    }
    return out;
}

CellCoord step_toward(const GridWorld& g, CellCoord pos, CellCoord target) {
    if (!g.in_bounds(pos) || !g.in_bounds(target))
        throw InputError("step_toward: coordinate out of bounds");
    if (pos.x != target.x) {
        pos.x += (target.x > pos.x) ? 1 : -1;
        return pos;
    }
    if (pos.y != target.y) {
        pos.y += (target.y > pos.y) ? 1 : -1;
        return pos;
    }
    return pos;
}

} // namespace ars
