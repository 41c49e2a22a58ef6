#include "ars/kernels.hpp"
#include "ars/errors.hpp"

namespace ars::kernels {

namespace {
const Backend* g_active = nullptr;

const Backend* pick_auto() {
    return avx2_available() ? &avx2_backend() : &scalar_backend();
}
} // namespace

const Backend& active() {
    if (!g_active) g_active = pick_auto();
    return *g_active;
}

void select(const std::string& name) {
    if (name == "auto") {
        g_active = pick_auto();
    } else if (name == "scalar") {
        g_active = &scalar_backend();
    } else if (name == "avx2") {
        if (!avx2_available())
            throw ConfigError("sim.kernels", "avx2 kernels requested but CPU lacks AVX2");
        g_active = &avx2_backend();
    } else {
        throw ConfigError("sim.kernels", "unknown kernel backend '" + name + "'");
    }
}

} // namespace ars::kernels
