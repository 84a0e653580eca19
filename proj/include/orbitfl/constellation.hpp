#pragma once

// Walker Delta constellation over a spherical, uniformly rotating Earth.
//
// Frame: Earth-centered inertial, coincident with Earth-fixed at t = 0 (x axis
// through latitude 0 / longitude 0, z axis through the north pole). Orbits are
// circular two-body orbits; no J2 or drag.

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "orbitfl/constants.hpp"
#include "orbitfl/error.hpp"

namespace orbitfl {

struct ConstellationConfig {
    int num_orbits = 6;
    int sats_per_orbit = 10;
    double altitude_km = 530.0;
    double inclination_deg = 85.0;
    // Unset means 360 / num_orbits.
    std::optional<double> raan_spacing_deg;
    double phase_offset_deg = 0.0;
    double epoch_s = 0.0;

    double raan_spacing() const {
        return raan_spacing_deg ? *raan_spacing_deg : 360.0 / num_orbits;
    }
    int num_satellites() const { return num_orbits * sats_per_orbit; }
};

struct SatelliteId {
    int orbit = 0;
    int slot = 0;

    auto operator<=>(const SatelliteId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const SatelliteId& id) {
    return os << '(' << id.orbit << ',' << id.slot << ')';
}

struct OrbitalElements {
    double semi_major_axis_km = 0.0;
    double inclination = 0.0;  // rad
    double raan = 0.0;         // rad
    double arg_latitude = 0.0; // rad, at t = 0
};

struct GroundStation {
    double latitude_deg = 37.95;   // Rolla, MO
    double longitude_deg = -91.77;
    double altitude_km = 0.0;
    double min_elevation_deg = 10.0;
};

struct EciPosition {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();  // km
    double t = 0.0;                               // s
};

struct VisibilityWindow {
    SatelliteId sat;
    double start = 0.0;
    double end = 0.0;
    // Slant range to the station at the window midpoint [km].
    double midpoint_range_km = 0.0;

    double duration() const { return end - start; }
    double midpoint() const { return 0.5 * (start + end); }
};

/// Wraps an angle to [0, 2*pi).
template <typename Scalar>
Scalar wrap_two_pi(Scalar angle) {
    using std::fmod;
    Scalar wrapped = fmod(angle, Scalar(kTwoPi));
    if (wrapped < Scalar(0)) wrapped += Scalar(kTwoPi);
    return wrapped;
}

/// Circular-orbit period for a given altitude, T = 2*pi / sqrt(mu) * (R_E + h)^(3/2).
/// Throws DomainError unless 0 < altitude < 2000 km.
double orbital_period(double altitude_km);

/// Circular orbital speed 2*pi*(R_E + h) / T [km/s].
double orbital_speed(double altitude_km);

/// Position on a circular orbit after `t` seconds, advancing the argument of
/// latitude at the uniform rate sqrt(mu / a^3).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> orbit_position(Scalar semi_major_axis, Scalar inclination,
                                           Scalar raan, Scalar arg_latitude, Scalar t) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const Scalar mean_motion = sqrt(Scalar(kEarthMuKm3) / (semi_major_axis * semi_major_axis * semi_major_axis));
    const Scalar u = arg_latitude + mean_motion * t;
    const Scalar cu = cos(u), su = sin(u);
    const Scalar co = cos(raan), so = sin(raan);
    const Scalar ci = cos(inclination), si = sin(inclination);
    return semi_major_axis * Eigen::Matrix<Scalar, 3, 1>(cu * co - su * ci * so,
                                                         cu * so + su * ci * co,
                                                         su * si);
}

/// Point on the spherical Earth rotated by omega_E * t about the polar axis.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> surface_position(Scalar latitude, Scalar longitude, Scalar altitude_km,
                                             Scalar t) {
    using std::cos;
    using std::sin;
    const Scalar radius = Scalar(kEarthRadiusKm) + altitude_km;
    const Scalar lon = longitude + Scalar(kEarthRotationRate) * t;
    return radius * Eigen::Matrix<Scalar, 3, 1>(cos(latitude) * cos(lon),
                                                cos(latitude) * sin(lon),
                                                sin(latitude));
}

/// Elevation of `target` above the local horizon at `observer` [rad]. Both are
/// geocentric vectors; the horizon plane is normal to the observer's radius.
template <typename Derived1, typename Derived2>
typename Derived1::Scalar elevation(const Eigen::MatrixBase<Derived1>& target,
                                    const Eigen::MatrixBase<Derived2>& observer) {
    using Scalar = typename Derived1::Scalar;
    using std::asin;
    using std::clamp;
    const Eigen::Matrix<Scalar, 3, 1> line_of_sight = target - observer;
    const Scalar range = line_of_sight.norm();
    if (!(range > Scalar(0)) || !(observer.norm() > Scalar(0))) {
        throw DomainError("elevation: satellite and ground station positions coincide");
    }
    const Scalar sine = observer.normalized().dot(line_of_sight / range);
    return asin(clamp(sine, Scalar(-1), Scalar(1)));
}

OrbitalElements elements_for(const ConstellationConfig& cfg, SatelliteId id);

EciPosition propagate(const OrbitalElements& elements, double t);

EciPosition ground_station_eci(const GroundStation& gs, double t);

/// Elevation angle [deg] of `sat_pos` as seen from `gs_pos`, in [-90, 90].
double elevation_angle(const EciPosition& sat_pos, const EciPosition& gs_pos);

/// Slant range [km] at which a satellite at `altitude_km` sits exactly at
/// `min_elevation_deg` above the horizon.
double slant_range_at_elevation(double altitude_km, double min_elevation_deg,
                                double gs_altitude_km = 0.0);

std::vector<SatelliteId> all_satellites(const ConstellationConfig& cfg);

struct WindowSearch {
    double horizon_s = 86400.0;
    // Sampling step near visibility; passes are refined by bisection to `tolerance_s`.
    double step_s = 1.0;
    double tolerance_s = 0.1;
};

/// Maximal intervals in [0, horizon] during which each satellite is at or above
/// the station's minimum elevation. Sorted by (sat, start).
std::vector<VisibilityWindow> compute_windows(const ConstellationConfig& cfg, const GroundStation& gs,
                                              const WindowSearch& search);

/// Convenience overload with the default step and tolerance.
std::vector<VisibilityWindow> compute_windows(const ConstellationConfig& cfg, const GroundStation& gs,
                                              double horizon_s, double step_s = 1.0);

/// Windows of one satellite only.
std::vector<VisibilityWindow> satellite_windows(const ConstellationConfig& cfg, const GroundStation& gs,
                                                SatelliteId sat, const WindowSearch& search);

struct WindowMatch {
    VisibilityWindow window;
    double wait = 0.0;
};

/// Earliest window of `sat` with end > t. `windows` must be sorted per satellite.
std::optional<WindowMatch> next_window(const std::vector<VisibilityWindow>& windows, SatelliteId sat,
                                       double t);

/// Window list indexed by satellite, with the search horizon it was computed for.
class WindowTable {
public:
    WindowTable() = default;
    WindowTable(const ConstellationConfig& cfg, std::vector<VisibilityWindow> windows, double horizon_s);

    static WindowTable compute(const ConstellationConfig& cfg, const GroundStation& gs,
                               const WindowSearch& search);

    /// Throws HorizonExhausted when no window of `sat` ends after t.
    WindowMatch next(SatelliteId sat, double t) const;
    std::optional<WindowMatch> try_next(SatelliteId sat, double t) const;

    const std::vector<VisibilityWindow>& of(SatelliteId sat) const;
    std::vector<VisibilityWindow> flat() const;
    double horizon() const { return horizon_s_; }
    int sats_per_orbit() const { return sats_per_orbit_; }

private:
    int sats_per_orbit_ = 0;
    double horizon_s_ = 0.0;
    std::vector<std::vector<VisibilityWindow>> per_sat_;
};

/// CSV with header `sat_orbit,sat_slot,start_s,end_s,duration_s`.
std::string windows_csv(const std::vector<VisibilityWindow>& windows);

}  // namespace orbitfl
