#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ars/grid.hpp"
#include "ars/rng.hpp"

namespace ars {

struct RawTrip {
    double pickup_lon = 0.0;
    double pickup_lat = 0.0;
    double dropoff_lon = 0.0;
    double dropoff_lat = 0.0;
    std::int64_t pickup_time = 0; // seconds since 1970-01-01 00:00:00
};

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

// Study region and time window. The quadrilateral must be simple.
struct StudyWindow {
    std::array<LonLat, 4> quad;
    std::int64_t start = 0;
    std::int64_t end = 0;
};

void validate(const StudyWindow& w);

// "YYYY-MM-DD HH:MM:SS" (or with 'T') to seconds since epoch, no timezone.
std::int64_t parse_timestamp(const std::string& text);

// Column-name map for the comma-separated trip-record schema.
struct ColumnMap {
    std::string pickup_lon_col = "pickup_longitude";
    std::string pickup_lat_col = "pickup_latitude";
    std::string dropoff_lon_col = "dropoff_longitude";
    std::string dropoff_lat_col = "dropoff_latitude";
    std::string pickup_time_col = "tpep_pickup_datetime";
};

struct ParseResult {
    std::vector<RawTrip> trips;
    std::size_t skipped = 0;
};

// Rows with unparseable fields are skipped and counted; a missing file or a
// missing mapped column is an input error naming the column.
ParseResult parse_trip_records(const std::string& path, const ColumnMap& cols = {});

// boundary points count as inside
bool point_in_quad(LonLat p, const std::array<LonLat, 4>& quad);

// Keeps trips with pickup_time in [start,end) and both endpoints inside the
// quadrilateral.
std::vector<RawTrip> filter_window(const std::vector<RawTrip>& trips, const StudyWindow& w);

// Affine lon/lat -> cell mapping over the quadrilateral's bounding box,
// clamped to grid bounds. Returns nothing when origin == destination.
std::optional<TripSpec> map_to_grid(const RawTrip& trip, const StudyWindow& w,
                                    const GridWorld& g);

// Distance-stratified sample: grid distances split into `bins` equal-width
// ranges, ceil(n/bins) drawn per occupied bin (with replacement when a bin is
// short), interleaved round-robin and truncated to n. Deterministic per seed.
std::vector<TripSpec> stratified_sample(const std::vector<TripSpec>& trips,
                                        const GridWorld& g, std::size_t n,
                                        std::size_t bins, RngStream& rng);

// Synthetic fallback pool: uniform random in-bounds trips, origin != destination.
std::vector<TripSpec> synthetic_trip_pool(const GridWorld& g, std::size_t count,
                                          RngStream& rng);

// Grid-trips file: '#' header line, then "ox oy dx dy" per row.
void save_trips(const std::string& path, const std::vector<TripSpec>& trips);
std::vector<TripSpec> load_trips(const std::string& path, const GridWorld& g);

} // namespace ars
