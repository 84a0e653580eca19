#include "orbitfl/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace orbitfl {

double orbital_period(double altitude_km) {
    if (!(altitude_km > 0.0) || !(altitude_km < 2000.0)) {
        throw DomainError(fmt::format("orbital_period: altitude {} km outside (0, 2000)", altitude_km));
    }
    const double a = kEarthRadiusKm + altitude_km;
    return kTwoPi / std::sqrt(kEarthMuKm3) * std::pow(a, 1.5);
}

double orbital_speed(double altitude_km) {
    return kTwoPi * (kEarthRadiusKm + altitude_km) / orbital_period(altitude_km);
}

OrbitalElements elements_for(const ConstellationConfig& cfg, SatelliteId id) {
    OrbitalElements e;
    e.semi_major_axis_km = kEarthRadiusKm + cfg.altitude_km;
    e.inclination = deg2rad(cfg.inclination_deg);
    e.raan = wrap_two_pi(deg2rad(id.orbit * cfg.raan_spacing()));
    e.arg_latitude = wrap_two_pi(deg2rad(id.slot * (360.0 / cfg.sats_per_orbit) + id.orbit * cfg.phase_offset_deg));
    return e;
}

EciPosition propagate(const OrbitalElements& e, double t) {
    return {orbit_position(e.semi_major_axis_km, e.inclination, e.raan, e.arg_latitude, t), t};
}

EciPosition ground_station_eci(const GroundStation& gs, double t) {
    return {surface_position(deg2rad(gs.latitude_deg), deg2rad(gs.longitude_deg), gs.altitude_km, t), t};
}

double elevation_angle(const EciPosition& sat_pos, const EciPosition& gs_pos) {
    return rad2deg(elevation(sat_pos.r, gs_pos.r));
}

double slant_range_at_elevation(double altitude_km, double min_elevation_deg, double gs_altitude_km) {
    // Law of cosines in the triangle (Earth center, station, satellite).
    const double rs = kEarthRadiusKm + gs_altitude_km;
    const double rsat = kEarthRadiusKm + altitude_km;
    const double el = deg2rad(min_elevation_deg);
    return -rs * std::sin(el) + std::sqrt(rsat * rsat - rs * rs * std::cos(el) * std::cos(el));
}

std::vector<SatelliteId> all_satellites(const ConstellationConfig& cfg) {
    std::vector<SatelliteId> ids;
    ids.reserve(static_cast<std::size_t>(cfg.num_satellites()));
    for (int n = 0; n < cfg.num_orbits; ++n)
        for (int j = 0; j < cfg.sats_per_orbit; ++j) ids.push_back({n, j});
    return ids;
}

namespace {

struct PassGeometry {
    OrbitalElements elements;
    GroundStation gs;
    double min_elevation;  // rad
    double max_central;    // largest Earth-central angle with elevation >= min
    double angular_rate;   // bound on the rate of change of the central angle

    bool visible(double t) const {
        const auto sat = propagate(elements, t).r;
        const auto station = ground_station_eci(gs, t).r;
        return elevation(sat, station) >= min_elevation;
    }

    VisibilityWindow window(SatelliteId sat, double start, double end) const {
        const double mid = 0.5 * (start + end);
        const double range = (propagate(elements, mid).r - ground_station_eci(gs, mid).r).norm();
        return {sat, start, end, range};
    }

    // Time that can be skipped from an invisible sample without missing a rise.
    double safe_skip(double t) const {
        const auto sat = propagate(elements, t).r.normalized();
        const auto station = ground_station_eci(gs, t).r.normalized();
        const double central = std::acos(std::clamp(sat.dot(station), -1.0, 1.0));
        const double margin = central - max_central;
        return margin > 0.0 ? 0.9 * margin / angular_rate : 0.0;
    }
};

PassGeometry pass_geometry(const ConstellationConfig& cfg, const GroundStation& gs, SatelliteId sat) {
    PassGeometry g;
    g.elements = elements_for(cfg, sat);
    g.gs = gs;
    g.min_elevation = deg2rad(gs.min_elevation_deg);
    const double rs = kEarthRadiusKm + gs.altitude_km;
    const double ratio = std::clamp(rs / g.elements.semi_major_axis_km * std::cos(g.min_elevation), -1.0, 1.0);
    g.max_central = std::acos(ratio) - g.min_elevation;
    g.angular_rate = kTwoPi / orbital_period(cfg.altitude_km) + kEarthRotationRate;
    return g;
}

}  // namespace

std::vector<VisibilityWindow> satellite_windows(const ConstellationConfig& cfg, const GroundStation& gs,
                                                SatelliteId sat, const WindowSearch& search) {
    std::vector<VisibilityWindow> out;
    if (gs.min_elevation_deg >= 90.0) return out;
    const PassGeometry geo = pass_geometry(cfg, gs, sat);

    // Boundary between samples lo and hi (with different visibility) refined by bisection.
    auto refine = [&](double lo, double hi, bool lo_visible) {
        while (hi - lo > search.tolerance_s) {
            const double mid = 0.5 * (lo + hi);
            if (geo.visible(mid) == lo_visible) lo = mid;
            else hi = mid;
        }
        // Report the visible side so the endpoints themselves satisfy the mask.
        return lo_visible ? lo : hi;
    };

    double t = 0.0;
    bool visible = geo.visible(t);
    double open = 0.0;
    while (t < search.horizon_s) {
        double step = search.step_s;
        if (!visible) step = std::max(step, geo.safe_skip(t));
        const double next = std::min(t + step, search.horizon_s);
        const bool next_visible = geo.visible(next);
        if (next_visible != visible) {
            const double edge = refine(t, next, visible);
            if (next_visible) {
                open = edge;
            } else if (edge > open) {
                out.push_back(geo.window(sat, open, edge));
            }
        }
        t = next;
        visible = next_visible;
    }
    if (visible && search.horizon_s > open) out.push_back(geo.window(sat, open, search.horizon_s));
    return out;
}

std::vector<VisibilityWindow> compute_windows(const ConstellationConfig& cfg, const GroundStation& gs,
                                              const WindowSearch& search) {
    std::vector<VisibilityWindow> out;
    for (const auto& id : all_satellites(cfg)) {
        auto w = satellite_windows(cfg, gs, id, search);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

std::vector<VisibilityWindow> compute_windows(const ConstellationConfig& cfg, const GroundStation& gs,
                                              double horizon_s, double step_s) {
    return compute_windows(cfg, gs, WindowSearch{horizon_s, step_s, 0.1});
}

std::optional<WindowMatch> next_window(const std::vector<VisibilityWindow>& windows, SatelliteId sat,
                                       double t) {
    for (const auto& w : windows) {
        if (w.sat == sat && w.end > t) return WindowMatch{w, std::max(0.0, w.start - t)};
    }
    return std::nullopt;
}

WindowTable::WindowTable(const ConstellationConfig& cfg, std::vector<VisibilityWindow> windows,
                         double horizon_s)
    : sats_per_orbit_(cfg.sats_per_orbit),
      horizon_s_(horizon_s),
      per_sat_(static_cast<std::size_t>(cfg.num_satellites())) {
    for (auto& w : windows) {
        per_sat_.at(static_cast<std::size_t>(w.sat.orbit * sats_per_orbit_ + w.sat.slot)).push_back(w);
    }
    for (auto& list : per_sat_) {
        std::sort(list.begin(), list.end(),
                  [](const VisibilityWindow& a, const VisibilityWindow& b) { return a.start < b.start; });
    }
}

WindowTable WindowTable::compute(const ConstellationConfig& cfg, const GroundStation& gs,
                                 const WindowSearch& search) {
    return WindowTable(cfg, compute_windows(cfg, gs, search), search.horizon_s);
}

const std::vector<VisibilityWindow>& WindowTable::of(SatelliteId sat) const {
    return per_sat_.at(static_cast<std::size_t>(sat.orbit * sats_per_orbit_ + sat.slot));
}

std::optional<WindowMatch> WindowTable::try_next(SatelliteId sat, double t) const {
    const auto& list = of(sat);
    auto it = std::upper_bound(list.begin(), list.end(), t,
                               [](double time, const VisibilityWindow& w) { return time < w.end; });
    if (it == list.end()) return std::nullopt;
    return WindowMatch{*it, std::max(0.0, it->start - t)};
}

WindowMatch WindowTable::next(SatelliteId sat, double t) const {
    auto match = try_next(sat, t);
    if (!match) {
        throw HorizonExhausted(fmt::format("no visibility window for satellite ({},{}) after t={:.1f} s "
                                           "(horizon {:.1f} s)",
                                           sat.orbit, sat.slot, t, horizon_s_));
    }
    return *match;
}

std::vector<VisibilityWindow> WindowTable::flat() const {
    std::vector<VisibilityWindow> out;
    for (const auto& list : per_sat_) out.insert(out.end(), list.begin(), list.end());
    return out;
}

std::string windows_csv(const std::vector<VisibilityWindow>& windows) {
    std::string out = "sat_orbit,sat_slot,start_s,end_s,duration_s\n";
    for (const auto& w : windows) {
        out += fmt::format("{},{},{:.1f},{:.1f},{:.1f}\n", w.sat.orbit, w.sat.slot, w.start, w.end, w.duration());
    }
    return out;
}

}  // namespace orbitfl
