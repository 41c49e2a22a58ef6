#include "ars/roles.hpp"
#include "ars/errors.hpp"

#include <algorithm>

namespace ars {

RoleMap assign_roles(const std::vector<int>& active,
                     const std::map<int, Score01>& scores, RngStream& rng) {
    if (active.empty())
        throw InputError("assign_roles: active agent set is empty");

    std::vector<int> ids = active;
    std::sort(ids.begin(), ids.end());

    double s_max = 0.0;
    for (int id : ids) {
        auto it = scores.find(id);
        if (it == scores.end())
            throw InputError("assign_roles: missing score for agent " + std::to_string(id));
        s_max = std::max(s_max, it->second);
    }
    // All scores <= 0.2 means everyone lands in the forced-driver branch and
    // the division never runs; the guard keeps the function total anyway.
    if (s_max <= 0.0) s_max = 1.0;

    RoleMap roles;
    for (int id : ids) {
        const double s = scores.at(id);
        if (s <= 0.2) {
            roles[id] = Role::driver;
            continue;
        }
        const double u1 = rng.uniform();
        if (u1 < 0.1) {
            roles[id] = rng.uniform() < 0.5 ? Role::driver : Role::rider;
        } else {
            const double p_rider = s / s_max;
            roles[id] = rng.uniform() < p_rider ? Role::rider : Role::driver;
        }
    }
    return roles;
}

} // namespace ars
