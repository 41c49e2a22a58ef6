#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ars/errors.hpp"
#include "ars/ingest.hpp"

using namespace ars;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "ars_ingest_test") {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& contents) const {
        const fs::path p = path / name;
        std::ofstream out(p);
        out << contents;
        return p.string();
    }
};

const char* kHeader =
    "VendorID,tpep_pickup_datetime,pickup_longitude,pickup_latitude,"
    "dropoff_longitude,dropoff_latitude\n";

std::string row(const std::string& time, double plon, double plat, double dlon, double dlat) {
    return "2," + time + "," + std::to_string(plon) + "," + std::to_string(plat) + "," +
           std::to_string(dlon) + "," + std::to_string(dlat) + "\n";
}

StudyWindow unit_window() {
    StudyWindow w;
    w.quad = {LonLat{0.0, 0.0}, LonLat{1.0, 0.0}, LonLat{1.0, 1.0}, LonLat{0.0, 1.0}};
    w.start = parse_timestamp("2016-01-02 09:00:00");
    w.end = parse_timestamp("2016-01-02 10:00:00");
    return w;
}

} // namespace

TEST_CASE("timestamp parsing") {
    CHECK(parse_timestamp("1970-01-01 00:00:00") == 0);
    CHECK(parse_timestamp("1970-01-02 00:00:01") == 86401);
    CHECK(parse_timestamp("2016-01-02 09:00:00") - parse_timestamp("2016-01-02 08:00:00") ==
          3600);
    CHECK_THROWS_AS(parse_timestamp("yesterday"), InputError);
}

TEST_CASE("parse_trip_records: empty file, malformed rows, fixture count") {
    TempDir tmp;

    const auto empty = tmp.file("empty.csv", kHeader);
    const auto r0 = parse_trip_records(empty);
    CHECK(r0.trips.empty());
    CHECK(r0.skipped == 0);

    const auto mixed = tmp.file("mixed.csv", std::string(kHeader) +
                                                 row("2016-01-02 09:10:00", 0.2, 0.2, 0.8, 0.8) +
                                                 "2,not-a-time,0.1,0.1,0.2\n");
    const auto r1 = parse_trip_records(mixed);
    CHECK(r1.trips.size() == 1);
    CHECK(r1.skipped == 1);

    // 100-row fixture: 60 valid, 40 malformed by construction
    std::string contents = kHeader;
    for (int i = 0; i < 100; ++i) {
        if (i % 5 < 3) contents += row("2016-01-02 09:30:00", 0.1, 0.1, 0.9, 0.9);
        else contents += "2,2016-01-02 09:30:00,bad,0.1,0.9,0.9\n";
    }
    const auto r2 = parse_trip_records(tmp.file("fixture.csv", contents));
    CHECK(r2.trips.size() == 60);
    CHECK(r2.skipped == 40);

    CHECK_THROWS_AS(parse_trip_records(tmp.path / "missing.csv"), InputError);
    const auto nocol = tmp.file("nocol.csv", "a,b,c\n1,2,3\n");
    CHECK_THROWS_WITH_AS(parse_trip_records(nocol),
                         doctest::Contains("pickup_longitude"), InputError);
}

TEST_CASE("filter_window: time boundaries and polygon membership") {
    const StudyWindow w = unit_window();

    std::vector<RawTrip> trips;
    RawTrip at_start{0.5, 0.5, 0.6, 0.6, w.start};
    RawTrip at_end{0.5, 0.5, 0.6, 0.6, w.end};
    RawTrip on_vertex{0.0, 0.0, 0.5, 0.5, w.start + 10};
    RawTrip outside{1.5, 0.5, 0.6, 0.6, w.start + 10};
    trips = {at_start, at_end, on_vertex, outside};

    const auto kept = filter_window(trips, w);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].pickup_time == w.start);       // start boundary is kept
    CHECK(kept[1].pickup_lon == 0.0);            // vertex counts as inside
}

TEST_CASE("filter_window: hand-placed 10-in / 10-out fixture") {
    const StudyWindow w = unit_window();
    std::vector<RawTrip> trips;
    for (int i = 0; i < 10; ++i)
        trips.push_back({0.1 + 0.05 * i, 0.3, 0.6, 0.6, w.start + i});
    for (int i = 0; i < 10; ++i)
        trips.push_back({2.0 + i, 0.3, 0.6, 0.6, w.start + i});
    CHECK(filter_window(trips, w).size() == 10);
}

TEST_CASE("map_to_grid: corners, midpoint, zero-length rejection") {
    const StudyWindow w = unit_window();
    GridWorld g(15, 15, 0.28);

    const RawTrip corner_min{0.0, 0.0, 1.0, 1.0, w.start};
    const auto spec = map_to_grid(corner_min, w, g);
    REQUIRE(spec.has_value());
    CHECK(spec->origin == CellCoord{0, 0});
    CHECK(spec->destination == CellCoord{14, 14});

    const RawTrip mid{0.5, 0.5, 0.0, 0.0, w.start};
    const auto spec2 = map_to_grid(mid, w, g);
    REQUIRE(spec2.has_value());
    CHECK(spec2->origin == CellCoord{7, 7});

    const RawTrip same{0.5, 0.5, 0.5, 0.5, w.start};
    CHECK(!map_to_grid(same, w, g).has_value());

    StudyWindow degenerate = w;
    degenerate.quad = {LonLat{0, 0}, LonLat{0, 1}, LonLat{0, 0.5}, LonLat{0, 0.2}};
    CHECK_THROWS_AS(map_to_grid(mid, degenerate, g), InputError);
}

TEST_CASE("study window validation") {
    StudyWindow w = unit_window();
    CHECK_NOTHROW(validate(w));
    w.end = w.start;
    CHECK_THROWS_AS(validate(w), InputError);

    StudyWindow crossed = unit_window();
    crossed.quad = {LonLat{0, 0}, LonLat{1, 1}, LonLat{1, 0}, LonLat{0, 1}}; // bow tie
    CHECK_THROWS_AS(validate(crossed), InputError);
}

TEST_CASE("stratified sampling") {
    GridWorld g(15, 15, 1.0);
    RngStream rng(1);

    SUBCASE("n = bins = 1 draws one trip") {
        std::vector<TripSpec> trips{{{0, 0}, {1, 0}}, {{0, 0}, {5, 5}}};
        const auto out = stratified_sample(trips, g, 1, 1, rng);
        CHECK(out.size() == 1);
    }

    SUBCASE("all trips same length collapse to one occupied bin") {
        std::vector<TripSpec> trips;
        for (int i = 0; i < 10; ++i) trips.push_back({{i, 0}, {i, 3}});
        const auto out = stratified_sample(trips, g, 6, 4, rng);
        CHECK(out.size() == 6);
        for (const auto& t : out) CHECK(g.distance(t.origin, t.destination) == 3.0);
    }

    SUBCASE("30 trips in 3 known bins, n=9 gives 3 per bin") {
        std::vector<TripSpec> trips;
        for (int i = 0; i < 10; ++i) trips.push_back({{0, 0}, {1, 0}});   // length 1
        for (int i = 0; i < 10; ++i) trips.push_back({{0, 0}, {4, 3}});   // length 7
        for (int i = 0; i < 10; ++i) trips.push_back({{0, 0}, {7, 7}});   // length 14
        const auto out = stratified_sample(trips, g, 9, 3, rng);
        REQUIRE(out.size() == 9);
        int per_bin[3] = {0, 0, 0};
        for (const auto& t : out) {
            const double d = g.distance(t.origin, t.destination);
            if (d == 1.0) ++per_bin[0];
            else if (d == 7.0) ++per_bin[1];
            else if (d == 14.0) ++per_bin[2];
        }
        CHECK(per_bin[0] == 3);
        CHECK(per_bin[1] == 3);
        CHECK(per_bin[2] == 3);
    }

    SUBCASE("deterministic under a fixed seed") {
        std::vector<TripSpec> trips;
        RngStream pool_rng(5);
        trips = synthetic_trip_pool(g, 100, pool_rng);
        RngStream a(42), b(42);
        CHECK(stratified_sample(trips, g, 20, 5, a) == stratified_sample(trips, g, 20, 5, b));
    }

    SUBCASE("n = 0 and empty input") {
        std::vector<TripSpec> trips{{{0, 0}, {1, 0}}};
        CHECK(stratified_sample(trips, g, 0, 3, rng).empty());
        CHECK_THROWS_AS(stratified_sample({}, g, 3, 3, rng), InputError);
    }
}

TEST_CASE("synthetic pool and trips file round-trip") {
    GridWorld g(15, 15, 0.28);
    RngStream rng(9);
    const auto pool = synthetic_trip_pool(g, 500, rng);
    CHECK(pool.size() == 500);
    for (const auto& t : pool) {
        CHECK(g.in_bounds(t.origin));
        CHECK(g.in_bounds(t.destination));
        CHECK(!(t.origin == t.destination));
    }

    TempDir tmp;
    const auto path = (tmp.path / "trips.dat").string();
    save_trips(path, pool);
    CHECK(load_trips(path, g) == pool);
}
