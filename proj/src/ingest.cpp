#include "ars/ingest.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ars {

namespace {

// days since 1970-01-01 for a civil date (Howard Hinnant's algorithm)
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

} // namespace

void validate(const StudyWindow& w) {
    if (w.start >= w.end)
        throw InputError("study window start must precede end");
    // simple-polygon check: no two non-adjacent edges intersect
    auto seg_intersect = [](LonLat a, LonLat b, LonLat c, LonLat d) {
        auto cross = [](LonLat o, LonLat p, LonLat q) {
            return (p.lon - o.lon) * (q.lat - o.lat) - (p.lat - o.lat) * (q.lon - o.lon);
        };
        const double d1 = cross(c, d, a), d2 = cross(c, d, b);
        const double d3 = cross(a, b, c), d4 = cross(a, b, d);
        return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
    };
    for (int i = 0; i < 4; ++i) {
        const int j = (i + 2) % 4;
        if (seg_intersect(w.quad[i], w.quad[(i + 1) % 4], w.quad[j], w.quad[(j + 1) % 4]))
            throw InputError("study window quadrilateral is self-intersecting");
    }
}

std::int64_t parse_timestamp(const std::string& text) {
    int y, mo, d, h, mi, s;
    char sep;
    if (std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s) != 7)
        throw InputError("unparseable timestamp: " + text);
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        s < 0 || s > 60)
        throw InputError("timestamp fields out of range: " + text);
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

ParseResult parse_trip_records(const std::string& path, const ColumnMap& cols) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trip-record file: " + path);

    std::string header;
    if (!std::getline(in, header))
        throw InputError("trip-record file is empty (no header): " + path);
    const auto names = split_csv(header);

    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (trim(names[i]) == name) return i;
        throw InputError("trip-record file missing column '" + name + "': " + path);
    };
    const std::size_t c_plon = find_col(cols.pickup_lon_col);
    const std::size_t c_plat = find_col(cols.pickup_lat_col);
    const std::size_t c_dlon = find_col(cols.dropoff_lon_col);
    const std::size_t c_dlat = find_col(cols.dropoff_lat_col);
    const std::size_t c_time = find_col(cols.pickup_time_col);
    const std::size_t need = std::max({c_plon, c_plat, c_dlon, c_dlat, c_time});

    ParseResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() <= need) {
            ++result.skipped;
            continue;
        }
        RawTrip t;
        if (!parse_double(trim(fields[c_plon]), t.pickup_lon) ||
            !parse_double(trim(fields[c_plat]), t.pickup_lat) ||
            !parse_double(trim(fields[c_dlon]), t.dropoff_lon) ||
            !parse_double(trim(fields[c_dlat]), t.dropoff_lat)) {
            ++result.skipped;
            continue;
        }
        try {
            t.pickup_time = parse_timestamp(trim(fields[c_time]));
        } catch (const InputError&) {
            ++result.skipped;
            continue;
        }
        result.trips.push_back(t);
    }
    return result;
}

bool point_in_quad(LonLat p, const std::array<LonLat, 4>& quad) {
    // on-boundary counts as inside
    for (int i = 0; i < 4; ++i) {
        const LonLat a = quad[i], b = quad[(i + 1) % 4];
        const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
        if (std::abs(cross) <= 1e-15 &&
            p.lon >= std::min(a.lon, b.lon) - 1e-15 && p.lon <= std::max(a.lon, b.lon) + 1e-15 &&
            p.lat >= std::min(a.lat, b.lat) - 1e-15 && p.lat <= std::max(a.lat, b.lat) + 1e-15)
            return true;
    }
    // ray casting
    bool inside = false;
    for (int i = 0, j = 3; i < 4; j = i++) {
        const LonLat a = quad[i], b = quad[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

std::vector<RawTrip> filter_window(const std::vector<RawTrip>& trips, const StudyWindow& w) {
    std::vector<RawTrip> out;
    for (const RawTrip& t : trips) {
        if (t.pickup_time < w.start || t.pickup_time >= w.end) continue;
        if (!point_in_quad({t.pickup_lon, t.pickup_lat}, w.quad)) continue;
        if (!point_in_quad({t.dropoff_lon, t.dropoff_lat}, w.quad)) continue;
        out.push_back(t);
    }
    return out;
}

std::optional<TripSpec> map_to_grid(const RawTrip& trip, const StudyWindow& w,
                                    const GridWorld& g) {
    double min_lon = w.quad[0].lon, max_lon = w.quad[0].lon;
    double min_lat = w.quad[0].lat, max_lat = w.quad[0].lat;
    for (const LonLat& v : w.quad) {
        min_lon = std::min(min_lon, v.lon);
        max_lon = std::max(max_lon, v.lon);
        min_lat = std::min(min_lat, v.lat);
        max_lat = std::max(max_lat, v.lat);
    }
    if (!(max_lon > min_lon) || !(max_lat > min_lat))
        throw InputError("study window has zero area");

    auto to_cell = [&](double lon, double lat) {
        const double fx = (lon - min_lon) / (max_lon - min_lon) * g.width();
        const double fy = (lat - min_lat) / (max_lat - min_lat) * g.height();
        CellCoord c{static_cast<int>(std::floor(fx)), static_cast<int>(std::floor(fy))};
        c.x = std::clamp(c.x, 0, g.width() - 1);
        c.y = std::clamp(c.y, 0, g.height() - 1);
        return c;
    };
    TripSpec spec{to_cell(trip.pickup_lon, trip.pickup_lat),
                  to_cell(trip.dropoff_lon, trip.dropoff_lat)};
    if (spec.origin == spec.destination) return std::nullopt;
    return spec;
}

std::vector<TripSpec> stratified_sample(const std::vector<TripSpec>& trips,
                                        const GridWorld& g, std::size_t n,
                                        std::size_t bins, RngStream& rng) {
    if (trips.empty()) throw InputError("stratified_sample: empty trip set");
    if (n == 0) return {};
    if (bins == 0) bins = 1;

    std::vector<double> dist(trips.size());
    double dmin = 1e300, dmax = -1e300;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        dist[i] = g.distance(trips[i].origin, trips[i].destination);
        dmin = std::min(dmin, dist[i]);
        dmax = std::max(dmax, dist[i]);
    }

    std::vector<std::vector<std::size_t>> by_bin(bins);
    if (dmax > dmin) {
        for (std::size_t i = 0; i < trips.size(); ++i) {
            auto b = static_cast<std::size_t>((dist[i] - dmin) / (dmax - dmin) * bins);
            by_bin[std::min(b, bins - 1)].push_back(i);
        }
    } else {
        for (std::size_t i = 0; i < trips.size(); ++i) by_bin[0].push_back(i);
    }

    std::vector<std::size_t> occupied;
    for (std::size_t b = 0; b < bins; ++b)
        if (!by_bin[b].empty()) occupied.push_back(b);

    const std::size_t quota = (n + occupied.size() - 1) / occupied.size();
    std::vector<std::vector<std::size_t>> picks(occupied.size());
    for (std::size_t k = 0; k < occupied.size(); ++k) {
        auto& pool = by_bin[occupied[k]];
        if (quota <= pool.size()) {
            // partial Fisher-Yates for distinct picks
            std::vector<std::size_t> shuffled = pool;
            for (std::size_t i = 0; i < quota; ++i) {
                const std::size_t j = i + rng.uniform_index(shuffled.size() - i);
                std::swap(shuffled[i], shuffled[j]);
                picks[k].push_back(shuffled[i]);
            }
        } else {
            picks[k] = pool;
            for (std::size_t i = pool.size(); i < quota; ++i)
                picks[k].push_back(pool[rng.uniform_index(pool.size())]);
        }
    }

    // round-robin across bins so truncation sheds evenly
    std::vector<TripSpec> out;
    out.reserve(n);
    for (std::size_t round = 0; round < quota && out.size() < n; ++round)
        for (std::size_t k = 0; k < occupied.size() && out.size() < n; ++k)
            if (round < picks[k].size()) out.push_back(trips[picks[k][round]]);
    return out;
}

std::vector<TripSpec> synthetic_trip_pool(const GridWorld& g, std::size_t count,
                                          RngStream& rng) {
    std::vector<TripSpec> out;
    out.reserve(count);
    while (out.size() < count) {
        CellCoord o{static_cast<int>(rng.uniform_index(g.width())),
                    static_cast<int>(rng.uniform_index(g.height()))};
        CellCoord d{static_cast<int>(rng.uniform_index(g.width())),
                    static_cast<int>(rng.uniform_index(g.height()))};
        if (o == d) continue;
        out.push_back(TripSpec{o, d});
    }
    return out;
}

void save_trips(const std::string& path, const std::vector<TripSpec>& trips) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write trips file: " + path);
    out << "# ox oy dx dy\n";
    for (const TripSpec& t : trips)
        out << t.origin.x << ' ' << t.origin.y << ' ' << t.destination.x << ' '
            << t.destination.y << '\n';
}

std::vector<TripSpec> load_trips(const std::string& path, const GridWorld& g) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trips file: " + path);
    std::vector<TripSpec> out;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        TripSpec spec;
        std::istringstream ss(t);
        if (!(ss >> spec.origin.x >> spec.origin.y >> spec.destination.x >> spec.destination.y))
            throw InputError("malformed trips file row: " + line);
        if (!g.in_bounds(spec.origin) || !g.in_bounds(spec.destination))
            throw InputError("trips file cell out of grid bounds: " + line);
        if (spec.origin == spec.destination)
            throw InputError("trips file contains zero-length trip: " + line);
        out.push_back(spec);
    }
    return out;
}

} // namespace ars
