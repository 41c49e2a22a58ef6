#pragma once
#include <map>
#include <vector>

#include "ars/economy.hpp"
#include "ars/rng.hpp"

namespace ars {

enum class Role : unsigned char { driver = 0, rider = 1 };

// Daily role map: exactly the active agents, one role each.
using RoleMap = std::map<int, Role>;

// Probabilistic daily role assignment from altruism scores.
//   s <= 0.2            -> driver, no draw
//   else w.p. 0.1       -> uniform random role
//   else                 -> rider w.p. s / s_max, driver otherwise
// Draws consume the stream in ascending agent-id order so the result depends
// only on (active set, scores, seed).
RoleMap assign_roles(const std::vector<int>& active,
                     const std::map<int, Score01>& scores, RngStream& rng);

} // namespace ars
