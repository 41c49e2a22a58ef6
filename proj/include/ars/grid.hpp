#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace ars {

struct CellCoord {
    int x = 0;
    int y = 0;
    bool operator==(const CellCoord&) const = default;
};

struct TripSpec {
    CellCoord origin;
    CellCoord destination;
    bool operator==(const TripSpec&) const = default;
};

// One planned pickup: who, where they board, where they leave.
struct PickupStop {
    int rider_id = -1;
    CellCoord pickup;
    CellCoord dropoff;
};

// Ordered rider pickup sequence for one driver.
struct PickupSequence {
    std::vector<PickupStop> stops;

    bool empty() const { return stops.empty(); }
    std::size_t size() const { return stops.size(); }
    bool contains(int rider_id) const;
};

// The spatial world: cells, pairwise distances, routes. Immutable after
// construction and safe to share read-only across threads.
class GridWorld {
public:
    // Synthetic Manhattan-metric grid.
    GridWorld(int width, int height, double cell_km);

    // Distance-matrix file: header "width height cell_km", then
    // (w*h)^2 whitespace-separated km values, row-major by (y*width+x).
    static GridWorld load(const std::string& path);
    void save(const std::string& path) const;

    int width() const { return width_; }
    int height() const { return height_; }
    double cell_km() const { return cell_km_; }
    double max_detour() const { return max_detour_; }
    bool in_bounds(CellCoord c) const {
        return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
    }
    int cell_index(CellCoord c) const { return c.y * width_ + c.x; }
    int cell_count() const { return width_ * height_; }

    double distance(CellCoord a, CellCoord b) const;

private:
    GridWorld() = default;
    void validate() const;
    void compute_max_detour();

    int width_ = 0;
    int height_ = 0;
    double cell_km_ = 0.0;
    double max_detour_ = 0.0;
    std::vector<double> dist_; // (w*h) x (w*h), row-major by cell index
};

double cell_distance(const GridWorld& g, CellCoord a, CellCoord b);

// Full planned route: driver origin -> pickups in sequence order -> dropoffs
// (incremental cheapest-insertion order) -> driver destination.
double route_length(const GridWorld& g, const TripSpec& driver, const PickupSequence& seq);

// Marginal cost of appending one more rider to the canonical route; never
// negative under the append-only route rule.
double detour(const GridWorld& g, const TripSpec& driver, const PickupSequence& seq,
              const TripSpec& rider, std::size_t capacity);

// Dropoff visit order for a pickup sequence: each rider's dropoff was inserted
// at its cheapest position when that rider was appended, so the order is a
// pure function of the sequence. `destination` is the driver's final stop.
std::vector<CellCoord> dropoff_order(const GridWorld& g, const PickupSequence& seq,
                                     CellCoord destination);

// Same order expressed as indices into seq.stops.
std::vector<std::size_t> dropoff_order_indices(const GridWorld& g, const PickupSequence& seq,
                                               CellCoord destination);

struct RiderCandidate {
    int id = -1;
    TripSpec trip;
};

// A driver part-way through its day. `seq` is the whole day's pickup sequence
// committed so far; the first `boarded` stops have already been picked up.
struct DriverQuery {
    TripSpec trip;
    CellCoord pos;
    double travelled_km = 0.0;
    PickupSequence seq;
    std::size_t boarded = 0;
};

// Remaining drive from the query position: pending pickups in order, then the
// dropoff chain, then the destination.
double remaining_route_length(const GridWorld& g, const DriverQuery& q);

// Generalized remaining drive for an explicit chain state: pending pickups in
// order, then the given dropoff chain, then the destination.
double remaining_route_length(const GridWorld& g, CellCoord pos,
                              const std::vector<PickupStop>& pending,
                              const std::vector<CellCoord>& chain, CellCoord destination);

// Insert one dropoff into an existing chain at its cheapest position,
// evaluated from `start` toward `destination`. Never shortens the chain.
void insert_dropoff(const GridWorld& g, CellCoord start, std::vector<CellCoord>& chain,
                    CellCoord dropoff, CellCoord destination);

// Marginal remaining cost of appending `rider` now; never negative.
double append_detour(const GridWorld& g, const DriverQuery& q, const TripSpec& rider);

// Unserved riders this driver may still take: within pickup radius of the
// driver's position, capacity not exceeded, and total route (travelled +
// remaining with the rider appended) within tolerance_mult * solo distance.
std::vector<int> feasible_riders(const GridWorld& g, const DriverQuery& q,
                                 const std::vector<RiderCandidate>& riders,
                                 double radius_km, std::size_t capacity,
                                 double tolerance_mult);

// One cell along a deterministic shortest Manhattan path, x axis first.
CellCoord step_toward(const GridWorld& g, CellCoord pos, CellCoord target);

} // namespace ars
