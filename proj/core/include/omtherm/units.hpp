#pragma once

#include <numbers>

namespace omtherm {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA 2018 exact values.
inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K

// Rates are stored as ordinary frequencies (omega / 2 pi) in Hz. Anything
// that enters an exponent or counts events per second uses the angular value.
constexpr double angular(double hz) noexcept { return kTwoPi * hz; }

}  // namespace omtherm
