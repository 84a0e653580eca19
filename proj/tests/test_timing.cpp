#include <doctest.h>

#include <cmath>
#include <vector>

#include "orbitfl/timing.hpp"

using namespace orbitfl;

namespace {

constexpr double kFilter2700 = 0.47202797202797203;
constexpr double kTrain600 = 10.55944055944056;
constexpr double kRelayTermV5 = 53.671202797202795;

WindowTable single_sat_table(std::vector<VisibilityWindow> windows, double horizon) {
    ConstellationConfig cfg;
    cfg.num_orbits = 1;
    cfg.sats_per_orbit = 1;
    return WindowTable(cfg, std::move(windows), horizon);
}

}  // namespace

TEST_CASE("compute times") {
    ComputeParams cp;
    CHECK(filter_time(2700, cp) == doctest::Approx(kFilter2700).epsilon(1e-12));
    CHECK(train_time(600, cp) == doctest::Approx(kTrain600).epsilon(1e-12));
    CHECK(minibatch_count(0, 4) == 0);
    CHECK(minibatch_count(1, 4) == 1);
    CHECK(minibatch_count(8, 4) == 2);
    CHECK(minibatch_count(9, 4) == 3);
    CHECK(train_time(0, cp) == doctest::Approx(1e8 / 1.43e9));
}

TEST_CASE("round timing composition") {
    const RoundTiming rt = compose_round_timing(10.0, 1.0, 0.5, 2.0, 3.0);
    CHECK(rt.t_total == doctest::Approx(18.0));
    const double relay = isl_relay_time(0.437e6 * 8, relay_hops(10), IslParams{});
    CHECK(relay_time_formula(5, relay, kTrain600, 0.0, 0.0, 0.0, 0.0) == doctest::Approx(kRelayTermV5));
    CHECK(relay_time_formula(0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0) == doctest::Approx(23.0));
}

TEST_CASE("hop count is ceil(I/2)") {
    const int expected[] = {0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6};
    for (int i = 1; i <= 12; ++i) CHECK(relay_hops(i) == expected[i]);
}

TEST_CASE("star round time without a missed window") {
    const auto table = single_sat_table({{{0, 0}, 100, 700, 1000}, {{0, 0}, 6000, 6600, 1000}}, 10000);
    const LinkParams lp;
    const ComputeParams cp;
    const RoundTiming rt = sat_round_time({{0, 0}, 2700, 600}, 960, table, lp, cp, 0.0, 1000.0);
    CHECK(rt.t_wait == 100.0);
    CHECK(rt.t_prop == doctest::Approx(1000.0 / kSpeedOfLightKm));
    CHECK(rt.t_trans == doctest::Approx(960.0 / data_rate(lp, 1000.0)));
    CHECK(rt.t_visible == 600.0);
    CHECK(!rt.misses_window());
    CHECK(rt.penalized_total() == rt.t_total);
}

TEST_CASE("missed window adds alpha * t_wait") {
    // Starting inside window [100, 200]; next pass at 3700, T = 1000. The
    // large load finishes training near 625 s, so alpha = floor(3075 / 1000) = 3.
    const auto table = single_sat_table({{{0, 0}, 100, 200, 1000}, {{0, 0}, 3700, 3800, 1000}}, 10000);
    const LinkParams lp;
    const ComputeParams cp;
    const RoundTiming small = sat_round_time({{0, 0}, 100, 40}, 960, table, lp, cp, 100.0, 1000.0);
    const RoundTiming large = sat_round_time({{0, 0}, 100, 30000}, 960, table, lp, cp, 100.0, 1000.0);
    CHECK(small.t_wait == 0.0);
    CHECK(!small.misses_window());
    CHECK(large.misses_window());
    CHECK(large.revolutions == 3);
    CHECK(large.penalized_total() - large.t_total == doctest::Approx(3 * large.t_wait));

    // alpha is at least 1 even when the next pass is less than a period away.
    const RoundTiming soon = sat_round_time({{0, 0}, 100, 30000}, 960, table, lp, cp, 0.0, 5000.0);
    CHECK(soon.revolutions == 1);

    const auto tight = single_sat_table({{{0, 0}, 100, 200, 1000}}, 1000);
    CHECK_THROWS_AS(sat_round_time({{0, 0}, 100, 30000}, 960, tight, lp, cp, 0.0, 1000.0), HorizonExhausted);
}

TEST_CASE("orbit star time sums penalized satellites") {
    std::vector<RoundTiming> rts(2);
    rts[0] = compose_round_timing(1, 0, 0, 0, 0);
    rts[0].t_visible = 10;
    rts[1] = compose_round_timing(5, 0, 0, 10, 0);
    rts[1].t_visible = 10;
    rts[1].revolutions = 2;
    CHECK(orbit_star_time(rts) == doctest::Approx(1 + 15 + 10));
    const std::vector<double> orbits{3.0, 7.0, 5.0};
    CHECK(star_round_time(orbits) == 7.0);
    CHECK(relay_round_time(orbits) == 7.0);
}

TEST_CASE("orbit relay timing picks the first visible satellite") {
    ConstellationConfig cfg;
    cfg.num_orbits = 1;
    cfg.sats_per_orbit = 3;
    const WindowTable table(cfg,
                            {{{0, 0}, 500, 900, 800}, {{0, 1}, 50, 400, 900}, {{0, 2}, 50, 400, 700},
                             {{0, 0}, 5000, 5400, 800}},
                            10000);
    const std::vector<SatelliteId> ring{{0, 0}, {0, 1}, {0, 2}};
    const std::vector<SatLoad> loads{{{0, 0}, 2700, 600}, {{0, 1}, 2700, 1200}};
    const LinkParams lp;
    const ComputeParams cp;
    const IslParams isl;
    const auto r = orbit_relay_time(0, ring, loads, 5, 960, isl, lp, cp, table, 0.0);
    CHECK(r.source == SatelliteId{0, 1});
    CHECK(r.t_wait == 50.0);
    CHECK(r.hops == 2);
    CHECK(r.t_train == doctest::Approx(train_time(1200, cp)));
    CHECK(r.t_filter == doctest::Approx(filter_time(2700, cp)));
    // Ready after about 50 + 5 * 21 s, still inside (0,1)'s pass.
    CHECK(r.uploader == SatelliteId{0, 1});
    CHECK(r.t_wait_upload == 0.0);
    const double literal =
        relay_time_formula(5, r.t_relay, r.t_train, r.t_filter, r.t_wait, r.t_trans_down, r.t_prop_down);
    CHECK(r.t_total == doctest::Approx(literal).epsilon(1e-12));

    const auto broadcast = orbit_relay_time(0, ring, loads, 5, 960, isl, lp, cp, table, 0.0, {true});
    CHECK(broadcast.t_total == doctest::Approx(r.t_total + r.t_relay));
}
