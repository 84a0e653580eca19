#include "orbitfl/link.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "orbitfl/constellation.hpp"
#include "orbitfl/error.hpp"

namespace orbitfl {

double path_loss(double distance_km, double wavelength_m, double max_los_distance_km) {
    if (!(distance_km > 0.0)) throw DomainError(fmt::format("path_loss: distance {} km must be positive", distance_km));
    if (max_los_distance_km > 0.0 && distance_km > max_los_distance_km) {
        throw NoLink(fmt::format("path_loss: {:.3f} km exceeds line-of-sight limit {:.3f} km", distance_km,
                                 max_los_distance_km));
    }
    return free_space_loss(distance_km, wavelength_m);
}

double snr(const LinkParams& lp, double distance_km) {
    const double loss = path_loss(distance_km, lp.wavelength_m, lp.max_los_distance_km);
    const double signal = dbm_to_watts(lp.tx_power_dbm) * db_to_linear(lp.gain_sat_dbi) * db_to_linear(lp.gain_ps_dbi);
    const double noise = lp.noise_temp_k * lp.bandwidth_hz * lp.boltzmann * loss;
    return signal / noise;
}

double shannon_rate(double bandwidth_hz, double snr_linear, double cap_bps) {
    const double rate = bandwidth_hz * std::log2(1.0 + snr_linear);
    return cap_bps > 0.0 ? std::min(rate, cap_bps) : rate;
}

double data_rate(const LinkParams& lp, double distance_km) {
    return shannon_rate(lp.bandwidth_hz, snr(lp, distance_km), lp.max_data_rate_bps);
}

double transmission_time(double model_bits, double rate_bps) {
    if (!(rate_bps > 0.0)) throw NoLink("transmission_time: zero data rate");
    return model_bits / rate_bps;
}

double propagation_time(double distance_km) {
    if (distance_km < 0.0) throw DomainError("propagation_time: negative distance");
    return distance_km / kSpeedOfLightKm;
}

double isl_hop_time(double model_bits, const IslParams& isl) {
    return model_bits / isl.capacity_bps();
}

double isl_relay_time(double model_bits, int hops, const IslParams& isl) {
    const double hop = isl_hop_time(model_bits, isl);
    double total = 0.0;
    for (int h = 1; h <= hops; ++h) total += isl.time_mode == IslTimeMode::Linear ? hop : h * hop;
    return total;
}

LinkParams resolve_link(LinkParams lp, double altitude_km, double min_elevation_deg, double gs_altitude_km) {
    if (lp.max_los_distance_km <= 0.0) {
        lp.max_los_distance_km = slant_range_at_elevation(altitude_km, min_elevation_deg, gs_altitude_km);
    }
    return lp;
}

std::string link_budget_csv(const LinkParams& lp, double d_min_km, double d_max_km, int steps) {
    std::string out = "distance_km,path_loss_db,snr_db,rate_mbps,los\n";
    LinkParams unchecked = lp;
    unchecked.max_los_distance_km = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double d = steps == 1 ? d_min_km : d_min_km + (d_max_km - d_min_km) * k / (steps - 1);
        const bool los = lp.max_los_distance_km <= 0.0 || d <= lp.max_los_distance_km;
        const double rate = los ? data_rate(unchecked, d) : 0.0;
        out += fmt::format("{:.9g},{:.6f},{:.6f},{:.6f},{}\n", d, linear_to_db(free_space_loss(d, lp.wavelength_m)),
                           linear_to_db(snr(unchecked, d)), rate / 1e6, los ? 1 : 0);
    }
    return out;
}

}  // namespace orbitfl
