#pragma once

// Satellite <-> parameter-server RF link budget (AWGN, free-space loss) and
// inter-satellite link transfer times.

#include <cmath>
#include <string>

#include "orbitfl/constants.hpp"

namespace orbitfl {

// Stored in datasheet units; conversion to linear happens inside snr().
struct LinkParams {
    double tx_power_dbm = 60.0;
    double gain_sat_dbi = 6.98;
    double gain_ps_dbi = 6.98;
    double noise_temp_k = 354.81;
    double bandwidth_hz = 0.5e9;
    double boltzmann = kBoltzmann;
    double wavelength_m = 0.015;
    double max_data_rate_bps = 16e6;
    double max_los_distance_km = 0.0;  // 0 => derive from altitude and min elevation
};

enum class IslTimeMode { Linear, Triangular };

struct IslParams {
    double bandwidth_hz = 20e6;
    double spectral_efficiency = 5.0;  // bit/s/Hz
    IslTimeMode time_mode = IslTimeMode::Linear;

    double capacity_bps() const { return bandwidth_hz * spectral_efficiency; }
};

template <typename Scalar>
Scalar db_to_linear(Scalar db) {
    using std::pow;
    return pow(Scalar(10), db / Scalar(10));
}

template <typename Scalar>
Scalar linear_to_db(Scalar ratio) {
    using std::log10;
    return Scalar(10) * log10(ratio);
}

template <typename Scalar>
Scalar dbm_to_watts(Scalar dbm) {
    return db_to_linear(dbm) * Scalar(1e-3);
}

template <typename Scalar>
Scalar watts_to_dbm(Scalar watts) {
    return linear_to_db(watts / Scalar(1e-3));
}

/// (4*pi*d / lambda)^2 without the line-of-sight check.
template <typename Scalar>
Scalar free_space_loss(Scalar distance_km, Scalar wavelength_m) {
    const Scalar x = Scalar(4.0 * kPi) * distance_km * Scalar(1000) / wavelength_m;
    return x * x;
}

/// Free-space path loss as a linear ratio. Throws NoLink when the distance
/// exceeds `max_los_distance_km` (ignored when that is 0) and DomainError when
/// the distance is not positive.
double path_loss(double distance_km, double wavelength_m, double max_los_distance_km = 0.0);

/// Linear SNR = P G_sat G_ps / (T B k_B L).
double snr(const LinkParams& lp, double distance_km);

/// min(B log2(1 + SNR), R_max) [bit/s].
double data_rate(const LinkParams& lp, double distance_km);

double shannon_rate(double bandwidth_hz, double snr_linear, double cap_bps = 0.0);

/// bits / rate. Throws NoLink for a non-positive rate.
double transmission_time(double model_bits, double rate_bps);

double propagation_time(double distance_km);

/// Time to push one model across one ISL hop.
double isl_hop_time(double model_bits, const IslParams& isl);

/// Total ISL time for an H-hop relay: H hops (linear) or sum_{h=1..H} h hops (triangular).
double isl_relay_time(double model_bits, int hops, const IslParams& isl);

/// Link params with max_los_distance_km filled from geometry when it was left at 0.
LinkParams resolve_link(LinkParams lp, double altitude_km, double min_elevation_deg, double gs_altitude_km = 0.0);

/// CSV `distance_km,path_loss_db,snr_db,rate_mbps,los`: `steps` rows evenly spaced from d_min to d_max.
std::string link_budget_csv(const LinkParams& lp, double d_min_km, double d_max_km, int steps);

}  // namespace orbitfl
