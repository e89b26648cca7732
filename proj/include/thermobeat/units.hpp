#pragma once

#include <numbers>

namespace thermobeat::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 (exact where the SI defines them).
inline constexpr double boltzmann = 1.380649e-23;        // J/K
inline constexpr double speed_of_light = 299792458.0;    // m/s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg

// Timestamp resolution shared by every event stream and file.
inline constexpr long long ticks_per_second = 1'000'000'000'000LL;  // 1 ps

}  // namespace thermobeat::constants
