#include "orbitfl/report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace orbitfl {

std::string summary_text(const RunResult& r, const Scenario& s) {
    long uplinks = 0, downlinks = 0, isl = 0;
    double up_bytes = 0, down_bytes = 0, max_flops = 0;
    std::size_t warnings = 0;
    for (const auto& rt : r.rounds) {
        uplinks += rt.uplinks;
        downlinks += rt.downlinks;
        up_bytes += rt.bytes_up;
        down_bytes += rt.bytes_down;
        isl += rt.isl_messages;
        max_flops = std::max(max_flops, rt.max_sat_flops);
        warnings += rt.warnings.size();
    }
    std::string out;
    out += fmt::format("mode: {}\n", mode_name(r.mode));
    out += fmt::format("seed: {}\n", r.seed);
    out += fmt::format("rounds: {}\n", r.rounds.size());
    out += fmt::format("stop_reason: {}\n", stop_reason_name(r.stop));
    if (!r.error.empty()) out += fmt::format("error: {}\n", r.error);
    out += fmt::format("final_accuracy: {:.4f}\n", r.metrics.accuracy);
    out += fmt::format("final_macro_f1: {:.4f}\n", r.metrics.macro_f1());
    out += fmt::format("simulated_hours: {:.4f}\n", r.simulated_s() / 3600.0);
    out += fmt::format("ps_uplinks: {}\n", uplinks);
    out += fmt::format("ps_downlinks: {}\n", downlinks);
    out += fmt::format("uplink_mb: {:.6f}\n", up_bytes / 1e6);
    out += fmt::format("downlink_mb: {:.6f}\n", down_bytes / 1e6);
    out += fmt::format("isl_messages: {}\n", isl);
    out += fmt::format("max_sat_flops_per_round: {:.6g}\n", max_flops);
    out += fmt::format("onboard_budget_seconds: {:.6g} (at {:.0f} GFLOPS)\n", max_flops / kOnboardFlopsBudget,
                       kOnboardFlopsBudget / 1e9);
    if (r.mode == Mode::Dnc) {
        out += fmt::format("negative_ratio: {} (non-target samples kept per target sample by the filter)\n",
                           s.protocol.negative_ratio);
    }
    out += fmt::format("warnings: {}\n", warnings);
    return out;
}

std::string accuracy_svg(const RunResult& r) {
    constexpr double kWidth = 640, kHeight = 400, kMargin = 50;
    const double plot_w = kWidth - 2 * kMargin, plot_h = kHeight - 2 * kMargin;
    const double t_max = std::max(r.simulated_s() / 3600.0, 1e-9);
    auto x = [&](double hours) { return kMargin + plot_w * hours / t_max; };
    auto y = [&](double acc) { return kHeight - kMargin - plot_h * acc; };

    std::string points = fmt::format("{:.2f},{:.2f}", x(0), y(r.initial_accuracy));
    for (const auto& rt : r.rounds) points += fmt::format(" {:.2f},{:.2f}", x(rt.end_s / 3600.0), y(rt.accuracy));

    std::string svg;
    svg += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
                       kWidth, kHeight, kWidth, kHeight);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kMargin,
                       kHeight - kMargin, kWidth - kMargin);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kMargin, kMargin,
                       kHeight - kMargin);
    for (int k = 0; k <= 4; ++k) {
        const double acc = 0.25 * k;
        svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"end\">{:.2f}</text>\n",
                           kMargin - 6, y(acc) + 4, acc);
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.0f}\" font-size=\"11\" text-anchor=\"middle\">{:.1f}</text>\n",
                           x(t_max * k / 4), kHeight - kMargin + 16, t_max * k / 4);
    }
    svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.0f}\" font-size=\"12\" text-anchor=\"middle\">simulated time [h]</text>\n",
                       kWidth / 2, kHeight - 10);
    svg += fmt::format("<text x=\"14\" y=\"{:.0f}\" font-size=\"12\" text-anchor=\"middle\" "
                       "transform=\"rotate(-90 14 {:.0f})\">test accuracy</text>\n",
                       kHeight / 2, kHeight / 2);
    svg += fmt::format("<text x=\"{:.0f}\" y=\"30\" font-size=\"13\" text-anchor=\"middle\">{} (seed {})</text>\n",
                       kWidth / 2, mode_name(r.mode), r.seed);
    svg += fmt::format("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n", points);
    svg += "</svg>\n";
    return svg;
}

std::string timing_report(const ClosedForm& cf) {
    std::string out = fmt::format("mode: {}\nstart_s: {:.3f}\n", mode_name(cf.mode), cf.t0);
    for (std::size_t n = 0; n < cf.orbit_s.size(); ++n) {
        out += fmt::format("orbit {}: {:.6f} s\n", n, cf.orbit_s[n]);
        if (cf.mode == Mode::Star) {
            for (const auto& rt : cf.star[n]) {
                out += fmt::format("  t_wait={:.3f} t_trans={:.6f} t_prop={:.6f} t_filter={:.6f} t_train={:.6f} "
                                   "t_req={:.3f} t_visible={:.3f} alpha={}\n",
                                   rt.t_wait, rt.t_trans, rt.t_prop, rt.t_filter, rt.t_train, rt.t_total,
                                   rt.t_visible, rt.revolutions);
            }
        } else {
            const auto& x = cf.relay[n];
            out += fmt::format("  source=({},{}) uploader=({},{}) V={} H={}\n", x.source.orbit, x.source.slot,
                               x.uploader.orbit, x.uploader.slot, x.epochs, x.hops);
            out += fmt::format("  t_wait={:.3f} t_trans={:.6f} t_prop={:.6f} t_filter={:.6f} t_train={:.6f} "
                               "t_relay={:.6f} t_broadcast={:.6f} t_wait_upload={:.3f} t_trans_up={:.6f} "
                               "t_prop_up={:.6f}\n",
                               x.t_wait, x.t_trans_down, x.t_prop_down, x.t_filter, x.t_train, x.t_relay,
                               x.t_broadcast, x.t_wait_upload, x.t_trans_up, x.t_prop_up);
        }
    }
    out += fmt::format("round_time_s: {:.6f}\nround_time_h: {:.6f}\n", cf.total_s, cf.total_s / 3600.0);
    return out;
}

}  // namespace orbitfl
