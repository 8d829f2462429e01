#pragma once

#include <numbers>

namespace rydmis {

// Unit convention: hbar = 1, energies and frequencies are angular
// frequencies in rad/us, times in us, distances in um.

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Rydberg van der Waals coefficient for Rb-87 (70S_1/2), rad/us * um^6.
inline constexpr double kC0 = kTwoPi * 8.6269e5;

// Default lattice constant, um. Puts nearest-neighbor interactions far
// above the drive scales while keeping next-nearest tails non-negligible.
inline constexpr double kDefaultSpacingUm = 4.5;

struct PhysicalConstants {
  double c0 = kC0;
  static constexpr double hbar = 1.0;
};

}  // namespace rydmis
