#include "orbitfl/timing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace orbitfl {

double RoundTiming::penalized_total() const {
    return misses_window() ? t_total + revolutions * t_wait : t_total;
}

double filter_time(long num_images, const ComputeParams& cp) {
    return static_cast<double>(num_images) * cp.filter_cycles_per_image / (cp.cpu_cores * cp.clock_hz);
}

long minibatch_count(long samples, int batch_size) {
    return (samples + batch_size - 1) / batch_size;
}

double train_time(long filtered_count, const ComputeParams& cp) {
    const double batches = static_cast<double>(minibatch_count(filtered_count, cp.batch_size));
    return (batches * cp.epochs * cp.cycles_per_batch + cp.overhead_cycles) / cp.clock_hz;
}

RoundTiming compose_round_timing(double t_wait, double t_trans, double t_prop, double t_filter, double t_train) {
    RoundTiming rt;
    rt.t_wait = t_wait;
    rt.t_trans = t_trans;
    rt.t_prop = t_prop;
    rt.t_filter = t_filter;
    rt.t_train = t_train;
    rt.t_total = t_wait + 2.0 * (t_trans + t_prop) + t_filter + t_train;
    return rt;
}

ExchangeTiming exchange_timing(const VisibilityWindow& window, double model_bits, const LinkParams& lp) {
    const double range = window.midpoint_range_km;
    return {transmission_time(model_bits, data_rate(lp, range)), propagation_time(range)};
}

RoundTiming sat_round_time(const SatLoad& load, double model_bits, const WindowTable& windows,
                           const LinkParams& lp, const ComputeParams& cp, double t_now, double period_s) {
    const WindowMatch match = windows.next(load.sat, t_now);
    const ExchangeTiming link = exchange_timing(match.window, model_bits, lp);
    RoundTiming rt = compose_round_timing(match.wait, link.t_trans, link.t_prop,
                                          filter_time(load.dataset_size, cp), train_time(load.train_count, cp));
    rt.t_visible = match.window.duration();
    if (rt.misses_window()) {
        // Whole revolutions between the end of training and the next pass.
        const double trained = t_now + rt.t_wait + rt.t_trans + rt.t_prop + rt.t_filter + rt.t_train;
        const auto& list = windows.of(load.sat);
        auto it = std::find_if(list.begin(), list.end(), [&](const VisibilityWindow& w) { return w.start > trained; });
        if (it == list.end()) {
            throw HorizonExhausted(fmt::format("no pass of satellite ({},{}) after training ends at {:.1f} s",
                                               load.sat.orbit, load.sat.slot, trained));
        }
        rt.revolutions = std::max(1, static_cast<int>(std::floor((it->start - trained) / period_s)));
    }
    return rt;
}

std::vector<RoundTiming> orbit_star_timings(std::span<const SatLoad> loads, double model_bits,
                                            const WindowTable& windows, const LinkParams& lp,
                                            const ComputeParams& cp, double t_now, double period_s) {
    std::vector<RoundTiming> out;
    double cursor = t_now;
    for (const auto& load : loads) {
        out.push_back(sat_round_time(load, model_bits, windows, lp, cp, cursor, period_s));
        cursor += out.back().penalized_total();
    }
    return out;
}

double orbit_star_time(std::span<const RoundTiming> per_sat) {
    double total = 0.0;
    for (const auto& rt : per_sat) total += rt.penalized_total();
    return total;
}

double star_round_time(std::span<const double> orbit_times) {
    double worst = 0.0;
    for (double t : orbit_times) worst = std::max(worst, t);
    return worst;
}

int relay_hops(int sats_per_orbit) {
    return (sats_per_orbit + 1) / 2;
}

double relay_time_formula(int orbital_epochs, double relay_time, double t_train, double t_filter, double t_wait,
                          double t_trans, double t_prop) {
    return orbital_epochs * (relay_time + t_train) + t_filter + t_wait + 2.0 * (t_trans + t_prop);
}

std::optional<std::pair<SatelliteId, WindowMatch>> first_visible(std::span<const SatelliteId> sats,
                                                                 const WindowTable& windows, double t) {
    std::optional<std::pair<SatelliteId, WindowMatch>> best;
    for (const auto& sat : sats) {
        auto match = windows.try_next(sat, t);
        if (!match) continue;
        if (!best || match->wait < best->second.wait ||
            (match->wait == best->second.wait && sat < best->first)) {
            best = std::make_pair(sat, *match);
        }
    }
    return best;
}

OrbitRelayTiming orbit_relay_time(int orbit, std::span<const SatelliteId> ring, std::span<const SatLoad> tasked,
                                  int orbital_epochs, double model_bits, const IslParams& isl,
                                  const LinkParams& lp, const ComputeParams& cp, const WindowTable& windows,
                                  double t_now, const RelayOptions& options) {
    OrbitRelayTiming out;
    out.orbit = orbit;
    out.epochs = orbital_epochs;
    out.hops = relay_hops(static_cast<int>(ring.size()));

    auto source = first_visible(ring, windows, t_now);
    if (!source) {
        throw HorizonExhausted(fmt::format("orbit {}: no satellite visible after t={:.1f} s", orbit, t_now));
    }
    out.source = source->first;
    out.t_wait = source->second.wait;
    const ExchangeTiming down = exchange_timing(source->second.window, model_bits, lp);
    out.t_trans_down = down.t_trans;
    out.t_prop_down = down.t_prop;

    for (const auto& load : tasked) {
        out.t_filter = std::max(out.t_filter, filter_time(load.dataset_size, cp));
        out.t_train = std::max(out.t_train, train_time(load.train_count, cp));
    }
    out.t_relay = isl_relay_time(model_bits, out.hops, isl);
    if (options.count_final_broadcast && orbital_epochs > 0) out.t_broadcast = out.t_relay;

    const double ready = t_now + out.t_wait + out.t_trans_down + out.t_prop_down + out.t_filter +
                         orbital_epochs * (out.t_relay + out.t_train) + out.t_broadcast;
    auto uploader = first_visible(ring, windows, ready);
    if (!uploader) {
        throw HorizonExhausted(fmt::format("orbit {}: no satellite visible for upload after t={:.1f} s", orbit, ready));
    }
    out.uploader = uploader->first;
    out.t_wait_upload = uploader->second.wait;
    const ExchangeTiming up = exchange_timing(uploader->second.window, model_bits, lp);
    out.t_trans_up = up.t_trans;
    out.t_prop_up = up.t_prop;

    out.t_total = out.t_wait + out.t_trans_down + out.t_prop_down + out.t_filter +
                  orbital_epochs * (out.t_relay + out.t_train) + out.t_broadcast + out.t_wait_upload +
                  out.t_trans_up + out.t_prop_up;
    return out;
}

double relay_round_time(std::span<const double> orbit_times) {
    return star_round_time(orbit_times);
}

}  // namespace orbitfl
