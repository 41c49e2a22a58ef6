#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "ars/errors.hpp"
#include "ars/grid.hpp"
#include "ars/rng.hpp"

using namespace ars;

namespace {

// independent leg-sum oracle: walk the planned stop list and add cell distances
double leg_sum(const GridWorld& g, const TripSpec& driver, const PickupSequence& seq) {
    CellCoord cur = driver.origin;
    double total = 0.0;
    for (const PickupStop& s : seq.stops) {
        total += g.distance(cur, s.pickup);
        cur = s.pickup;
    }
    for (const CellCoord& c : dropoff_order(g, seq, driver.destination)) {
        total += g.distance(cur, c);
        cur = c;
    }
    return total + g.distance(cur, driver.destination);
}

TripSpec random_trip(const GridWorld& g, RngStream& rng) {
    while (true) {
        TripSpec t{{static_cast<int>(rng.uniform_index(g.width())),
                    static_cast<int>(rng.uniform_index(g.height()))},
                   {static_cast<int>(rng.uniform_index(g.width())),
                    static_cast<int>(rng.uniform_index(g.height()))}};
        if (!(t.origin == t.destination)) return t;
    }
}

} // namespace

TEST_CASE("cell distances on the synthetic Manhattan grid") {
    GridWorld g(15, 15, 0.28);
    CHECK(cell_distance(g, {0, 0}, {0, 0}) == 0.0);
    CHECK(cell_distance(g, {0, 0}, {3, 4}) == doctest::Approx(7 * 0.28));
    CHECK(g.max_detour() == doctest::Approx(28 * 0.28));

    RngStream rng(1);
    for (int i = 0; i < 200; ++i) {
        const CellCoord a{static_cast<int>(rng.uniform_index(15)),
                          static_cast<int>(rng.uniform_index(15))};
        const CellCoord b{static_cast<int>(rng.uniform_index(15)),
                          static_cast<int>(rng.uniform_index(15))};
        CHECK(cell_distance(g, a, b) == cell_distance(g, b, a));
    }
    CHECK_THROWS_AS(cell_distance(g, {15, 0}, {0, 0}), InputError);
}

TEST_CASE("triangle inequality holds on the synthetic matrix") {
    GridWorld g(7, 7, 0.5);
    RngStream rng(2);
    for (int i = 0; i < 500; ++i) {
        const CellCoord a{static_cast<int>(rng.uniform_index(7)),
                          static_cast<int>(rng.uniform_index(7))};
        const CellCoord b{static_cast<int>(rng.uniform_index(7)),
                          static_cast<int>(rng.uniform_index(7))};
        const CellCoord c{static_cast<int>(rng.uniform_index(7)),
                          static_cast<int>(rng.uniform_index(7))};
        CHECK(g.distance(a, c) <= g.distance(a, b) + g.distance(b, c) + 1e-9);
    }
}

TEST_CASE("route length: empty and on-path cases") {
    GridWorld g(15, 15, 1.0);
    const TripSpec driver{{0, 0}, {4, 0}};
    PickupSequence empty;
    CHECK(route_length(g, driver, empty) == doctest::Approx(4.0));

    // rider exactly on the driver's direct path
    PickupSequence seq;
    seq.stops.push_back({7, {1, 0}, {3, 0}});
    CHECK(route_length(g, driver, seq) == doctest::Approx(4.0));
    CHECK(detour(g, driver, empty, TripSpec{{1, 0}, {3, 0}}, 4) == doctest::Approx(0.0));
}

TEST_CASE("route length equals the leg-sum oracle on random instances") {
    GridWorld g(5, 5, 1.0);
    RngStream rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const TripSpec driver = random_trip(g, rng);
        PickupSequence seq;
        for (int r = 0; r < 2; ++r) {
            const TripSpec rt = random_trip(g, rng);
            seq.stops.push_back({r, rt.origin, rt.destination});
        }
        CHECK(route_length(g, driver, seq) == doctest::Approx(leg_sum(g, driver, seq)));
    }
}

TEST_CASE("detour: hand case via the leg-sum oracle") {
    GridWorld g(15, 15, 1.0);
    const TripSpec driver{{0, 0}, {4, 0}};
    const TripSpec rider{{2, 2}, {2, 0}};
    PickupSequence empty;
    PickupSequence with;
    with.stops.push_back({1, rider.origin, rider.destination});
    const double expect = leg_sum(g, driver, with) - leg_sum(g, driver, empty);
    CHECK(detour(g, driver, empty, rider, 4) == doctest::Approx(expect));
    CHECK(detour(g, driver, empty, rider, 4) == doctest::Approx(4.0)); // frozen oracle value
}

TEST_CASE("append monotonicity and nonnegative detours") {
    GridWorld g(15, 15, 0.28);
    RngStream rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const TripSpec driver = random_trip(g, rng);
        PickupSequence seq;
        double prev = route_length(g, driver, seq);
        for (int r = 0; r < 4; ++r) {
            const TripSpec rider = random_trip(g, rng);
            const double d = detour(g, driver, seq, rider, 8);
            CHECK(d >= -1e-9);
            seq.stops.push_back({r, rider.origin, rider.destination});
            const double len = route_length(g, driver, seq);
            CHECK(len >= prev - 1e-9);
            CHECK(len - prev == doctest::Approx(d));
            prev = len;
        }
    }
}

TEST_CASE("append detour from a mid-route position is nonnegative") {
    GridWorld g(15, 15, 0.28);
    RngStream rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        DriverQuery q;
        q.trip = random_trip(g, rng);
        q.pos = CellCoord{static_cast<int>(rng.uniform_index(15)),
                          static_cast<int>(rng.uniform_index(15))};
        q.travelled_km = rng.uniform(0.0, 2.0);
        for (int r = 0; r < 2; ++r) {
            const TripSpec rt = random_trip(g, rng);
            q.seq.stops.push_back({r, rt.origin, rt.destination});
        }
        q.boarded = rng.uniform_index(q.seq.size() + 1);
        CHECK(append_detour(g, q, random_trip(g, rng)) >= -1e-9);
    }
}

TEST_CASE("feasible riders matches a brute-force filter") {
    GridWorld g(5, 5, 1.0);
    RngStream rng(6);
    for (int trial = 0; trial < 40; ++trial) {
        DriverQuery q;
        q.trip = random_trip(g, rng);
        q.pos = q.trip.origin;
        std::vector<RiderCandidate> riders;
        for (int r = 0; r < 3; ++r) riders.push_back({r, random_trip(g, rng)});
        const double radius = rng.uniform(0.0, 4.0);

        const auto got = feasible_riders(g, q, riders, radius, 4, 1.5);

        std::vector<int> expect;
        const double solo = g.distance(q.trip.origin, q.trip.destination);
        for (const auto& r : riders) {
            if (g.distance(q.pos, r.trip.origin) > radius + 1e-9) continue;
            PickupSequence with;
            with.stops.push_back({r.id, r.trip.origin, r.trip.destination});
            if (route_length(g, q.trip, with) <= 1.5 * solo + 1e-9) expect.push_back(r.id);
        }
        CHECK(got == expect);
    }
}

TEST_CASE("feasible riders: radius zero and capacity exhausted") {
    GridWorld g(5, 5, 1.0);
    DriverQuery q;
    q.trip = {{0, 0}, {4, 4}};
    q.pos = {0, 0};
    std::vector<RiderCandidate> riders{{1, {{2, 2}, {3, 3}}}};
    CHECK(feasible_riders(g, q, riders, 0.0, 4, 1.5).empty());

    q.seq.stops = {{2, {1, 1}, {2, 2}}, {3, {1, 2}, {2, 3}}};
    CHECK(feasible_riders(g, q, riders, 10.0, 2, 1.5).empty());
}

TEST_CASE("step_toward: axis rule and exhaustive path lengths") {
    GridWorld g(15, 15, 0.28);
    CHECK(step_toward(g, {0, 0}, {0, 0}) == CellCoord{0, 0});
    CHECK(step_toward(g, {0, 0}, {3, 0}) == CellCoord{1, 0});
    CHECK(step_toward(g, {2, 5}, {2, 9}) == CellCoord{2, 6});

    for (int ax = 0; ax < 15; ++ax)
        for (int ay = 0; ay < 15; ++ay)
            for (int bx = 0; bx < 15; ++bx)
                for (int by = 0; by < 15; ++by) {
                    CellCoord pos{ax, ay};
                    const CellCoord target{bx, by};
                    int steps = 0;
                    while (!(pos == target)) {
                        pos = step_toward(g, pos, target);
                        ++steps;
                    }
                    REQUIRE(steps == std::abs(ax - bx) + std::abs(ay - by));
                }
}

TEST_CASE("distance matrix file round-trip and validation") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ars_grid_test";
    fs::create_directories(dir);
    const std::string path = (dir / "dist.mat").string();

    GridWorld g(4, 3, 0.5);
    g.save(path);
    const GridWorld loaded = GridWorld::load(path);
    CHECK(loaded.width() == 4);
    CHECK(loaded.height() == 3);
    CHECK(loaded.cell_km() == 0.5);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            const CellCoord a{i % 4, i / 4}, b{j % 4, j / 4};
            CHECK(loaded.distance(a, b) == g.distance(a, b));
        }

    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("2 1 1.0\n0 1\n2 0\n", f); // asymmetric
        std::fclose(f);
        CHECK_THROWS_AS(GridWorld::load(path), InputError);
    }
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("2 1 1.0\n0 1\n", f); // truncated
        std::fclose(f);
        CHECK_THROWS_AS(GridWorld::load(path), InputError);
    }
    fs::remove_all(dir);
}
