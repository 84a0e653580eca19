#pragma once

namespace orbitfl {

// Mean spherical Earth radius [km].
inline constexpr double kEarthRadiusKm = 6371.0;
// Standard gravitational parameter G*M [km^3/s^2] (3.986004418e14 m^3/s^2).
inline constexpr double kEarthMuKm3 = 398600.4418;
// Sidereal rotation rate [rad/s].
inline constexpr double kEarthRotationRate = 7.2921159e-5;
// Speed of light [km/s].
inline constexpr double kSpeedOfLightKm = 299792.458;
// Boltzmann constant [J/K].
inline constexpr double kBoltzmann = 1.380649e-23;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace orbitfl
