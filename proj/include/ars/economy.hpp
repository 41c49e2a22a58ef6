#pragma once

namespace ars {

// Altruism scores live in [0,1] at all observable times.
using Score01 = double;

struct EconomyParams {
    double alpha_s = 0.1; // driver gain scaling
    double beta_s = 1.0;  // rider cost scaling; 1.0 conserves the pre-clamp sum
};

void validate(const EconomyParams& p);

// Clamp a raw detour into [0, max_detour] before scoring. Routing keeps
// detours under the grid diameter anyway; the clamp makes the gain total.
double clamp_detour(double detour_km, double max_detour);

// Points the driver earns for this match (also recorded as p_{i,j}):
// alpha_s * s_rider * (1 - detour/max_detour). Monotone decreasing in the
// detour, increasing in the rider's score, never negative.
double driver_gain(Score01 s_rider, double detour_km, double max_detour,
                   const EconomyParams& p);

// The rider pays proportionally: -beta_s * delta_driver. Always <= 0.
double rider_cost(double delta_driver, const EconomyParams& p);

// Clamped score update: max(0, min(1, s + delta)).
Score01 apply_update(Score01 s, double delta);

} // namespace ars
