#pragma once

// Closed-form round timing for star-topology FedAvg and for orbital relay /
// retraining. The event engine reproduces these values and the tests hold the
// two against each other.

#include <optional>
#include <span>
#include <vector>

#include "orbitfl/constellation.hpp"
#include "orbitfl/link.hpp"

namespace orbitfl {

struct ComputeParams {
    int cpu_cores = 4;
    double clock_hz = 1.43e9;
    double cycles_per_batch = 2e7;
    double overhead_cycles = 1e8;
    // Cost of evaluating the filtering policy on one image.
    double filter_cycles_per_image = 1e6;
    int batch_size = 4;
    int epochs = 5;
};

struct RoundTiming {
    double t_wait = 0.0;
    double t_trans = 0.0;
    double t_prop = 0.0;
    double t_filter = 0.0;
    double t_train = 0.0;
    double t_total = 0.0;
    // Length of the serving window and revolutions until the next one.
    double t_visible = 0.0;
    int revolutions = 0;

    bool misses_window() const { return t_total >= t_visible; }
    /// t_total, plus revolutions * t_wait when the exchange does not fit the window.
    double penalized_total() const;
};

/// D * pi / (C * f).
double filter_time(long num_images, const ComputeParams& cp);

/// ceil(m / kappa).
long minibatch_count(long samples, int batch_size);

/// (ceil(m / kappa) * J * c_process + c_overhead) / f.
double train_time(long filtered_count, const ComputeParams& cp);

/// Fills t_total = t_wait + 2 (t_trans + t_prop) + t_filter + t_train.
RoundTiming compose_round_timing(double t_wait, double t_trans, double t_prop, double t_filter, double t_train);

/// Per-satellite work for one round.
struct SatLoad {
    SatelliteId sat;
    long dataset_size = 0;  // images examined by the filter
    long train_count = 0;   // samples trained on
};

/// Link timing for one exchange in `window`, evaluated at the window's midpoint range.
struct ExchangeTiming {
    double t_trans = 0.0;
    double t_prop = 0.0;
};
ExchangeTiming exchange_timing(const VisibilityWindow& window, double model_bits, const LinkParams& lp);

/// Star-topology time for one satellite starting at `t_now`. Throws
/// HorizonExhausted if the windows do not reach far enough.
RoundTiming sat_round_time(const SatLoad& load, double model_bits, const WindowTable& windows,
                           const LinkParams& lp, const ComputeParams& cp, double t_now, double period_s);

/// Per-satellite timings of one orbit served one after another in `loads`
/// order, each starting when the previous one finished (penalty included).
std::vector<RoundTiming> orbit_star_timings(std::span<const SatLoad> loads, double model_bits,
                                            const WindowTable& windows, const LinkParams& lp,
                                            const ComputeParams& cp, double t_now, double period_s);

/// Sum of the per-satellite times of one orbit with the missed-window penalty.
double orbit_star_time(std::span<const RoundTiming> per_sat);

/// Max over orbits.
double star_round_time(std::span<const double> orbit_times);

/// ceil(I_n / 2).
int relay_hops(int sats_per_orbit);

/// V (sum_{h=1..H} t_isl + t_train) + t_filter + t_wait + 2 (t_trans + t_prop).
double relay_time_formula(int orbital_epochs, double relay_time, double t_train, double t_filter, double t_wait,
                          double t_trans, double t_prop);

struct RelayOptions {
    bool count_final_broadcast = false;
};

struct OrbitRelayTiming {
    int orbit = 0;
    SatelliteId source;
    SatelliteId uploader;
    int epochs = 0;
    int hops = 0;
    double t_wait = 0.0;       // until the first satellite of the orbit is visible
    double t_trans_down = 0.0;
    double t_prop_down = 0.0;
    double t_filter = 0.0;     // slowest filtering satellite
    double t_train = 0.0;      // slowest training satellite, per orbital epoch
    double t_relay = 0.0;      // sum over H hops of the per-hop ISL time
    double t_broadcast = 0.0;  // final in-orbit broadcast, when counted
    double t_wait_upload = 0.0;
    double t_trans_up = 0.0;
    double t_prop_up = 0.0;
    double t_total = 0.0;
};

/// Earliest-visible satellite among `sats` at time t (ties to the smaller id).
std::optional<std::pair<SatelliteId, WindowMatch>> first_visible(std::span<const SatelliteId> sats,
                                                                 const WindowTable& windows, double t);

/// Relay-and-retrain time for one orbit. `tasked` carries the training loads;
/// `ring` lists every satellite of the orbit (all relay and may upload).
OrbitRelayTiming orbit_relay_time(int orbit, std::span<const SatelliteId> ring, std::span<const SatLoad> tasked,
                                  int orbital_epochs, double model_bits, const IslParams& isl,
                                  const LinkParams& lp, const ComputeParams& cp, const WindowTable& windows,
                                  double t_now, const RelayOptions& options = {});

/// Max over orbits.
double relay_round_time(std::span<const double> orbit_times);

}  // namespace orbitfl
