#include "ars/economy.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ars {

void validate(const EconomyParams& p) {
    if (!(p.alpha_s > 0.0) || !std::isfinite(p.alpha_s))
        throw ConfigError("economy.alpha_s", "alpha_s must be finite and positive");
    if (!(p.beta_s > 0.0) || !std::isfinite(p.beta_s))
        throw ConfigError("economy.beta_s", "beta_s must be finite and positive");
}

double clamp_detour(double detour_km, double max_detour) {
    return std::clamp(detour_km, 0.0, max_detour);
}

double driver_gain(Score01 s_rider, double detour_km, double max_detour,
                   const EconomyParams& p) {
    if (!(max_detour > 0.0))
        throw ContractViolation("driver_gain: max_detour must be positive");
    if (detour_km < 0.0 || detour_km > max_detour)
        throw ContractViolation("driver_gain: detour outside [0, max_detour]; routing bug");
    return p.alpha_s * s_rider * (1.0 - detour_km / max_detour);
}

double rider_cost(double delta_driver, const EconomyParams& p) {
    if (delta_driver < 0.0)
        throw ContractViolation("rider_cost: driver delta must be nonnegative");
    return -p.beta_s * delta_driver;
}

Score01 apply_update(Score01 s, double delta) {
    return std::max(0.0, std::min(1.0, s + delta));
}

} // namespace ars
