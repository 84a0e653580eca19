#include <doctest.h>

#include <regex>
#include <stdexcept>

#include "orbitfl/report.hpp"
#include "orbitfl/sim.hpp"

using namespace orbitfl;

namespace {

Scenario small(Mode mode) {
    Scenario s;
    s.constellation.num_orbits = 2;
    s.constellation.sats_per_orbit = 4;
    s.dataset.num_classes = 4;
    s.dataset.train_per_class = 60;
    s.dataset.test_per_class = 20;
    s.protocol.mode = mode;
    s.simulation.horizon_hours = mode == Mode::Star ? 1500.0 : 240.0;
    s.termination.max_rounds = 2;
    return s;
}

}  // namespace

TEST_CASE("event queue orders by time then sequence") {
    EventQueue q;
    std::vector<int> order;
    q.schedule(2.0, EventKind::TrainDone, {}, [&] { order.push_back(3); });
    q.schedule(1.0, EventKind::WindowOpen, {}, [&] { order.push_back(1); });
    q.schedule(1.0, EventKind::ModelArrived, {}, [&] {
        order.push_back(2);
        q.schedule(q.now(), EventKind::AggregateDone, {}, [&] { order.push_back(4); });
    });
    CHECK(q.run() == 4);
    CHECK(order == std::vector<int>{1, 2, 4, 3});
    CHECK(q.now() == 2.0);
    CHECK(q.empty());
}

TEST_CASE("scheduling into the past is a logic error") {
    EventQueue q;
    q.schedule(5.0, EventKind::WindowOpen, {}, [&] { q.schedule(4.0, EventKind::RoundDone, {}, [] {}); });
    CHECK_THROWS_AS(q.run(), std::logic_error);
}

TEST_CASE("dnc run accounting and phases") {
    const Scenario s = small(Mode::Dnc);
    Simulator sim(s);
    std::vector<EventKind> kinds;
    sim.set_event_observer([&](const Event& e) { kinds.push_back(e.kind); });
    const RunResult r = sim.run();
    REQUIRE(r.rounds.size() == 2);
    CHECK(r.stop == StopReason::MaxRounds);
    const double bits = sim.model_bits();
    CHECK(bits == 4 * 3 * 32);
    const std::regex grammar(
        "Distribute (LocalTrain ForwardCollect OrbitalAggregate ReverseRelay )*"
        "LocalTrain ForwardCollect OrbitalAggregate Upload GlobalAggregate ");
    for (const auto& rt : r.rounds) {
        CHECK(rt.uplinks == 2);
        CHECK(rt.downlinks == 2);
        CHECK(rt.bytes_down == 2 * bits / 8);
        // Four tasked satellites per orbit, four classes each.
        CHECK(rt.metadata_bytes == 2 * (8 + 4 * (4 + 4 * 4)));
        CHECK(rt.bytes_up == rt.bytes_down + rt.metadata_bytes);
        CHECK(std::abs(rt.duration_s() - rt.closed_form_s) <= 1e-6);
        for (const auto& o : rt.orbits) {
            std::string phases;
            for (auto p : o.phases) phases += std::string(phase_name(p)) + " ";
            CHECK(std::regex_match(phases, grammar));
            CHECK(o.aggregators.size() == 5);
            REQUIRE(o.relay);
            CHECK(o.relay->hops == 2);
        }
        CHECK(rt.start_s <= rt.end_s);
    }
    CHECK(r.rounds[1].start_s == r.rounds[0].end_s);
    CHECK(kinds.front() == EventKind::WindowOpen);
    CHECK(std::count(kinds.begin(), kinds.end(), EventKind::RoundDone) == 2);
    CHECK(std::count(kinds.begin(), kinds.end(), EventKind::UploadDone) == 4);
}

TEST_CASE("star run accounting") {
    const Scenario s = small(Mode::Star);
    Simulator sim(s);
    const RunResult r = sim.run();
    REQUIRE(r.rounds.size() == 2);
    for (const auto& rt : r.rounds) {
        CHECK(rt.uplinks == 8);
        CHECK(rt.downlinks == 8);
        CHECK(rt.bytes_up == 8 * sim.model_bits() / 8);
        CHECK(rt.bytes_down == rt.bytes_up);
        CHECK(rt.isl_messages == 0);
        CHECK(std::abs(rt.duration_s() - rt.closed_form_s) <= 1e-6);
        for (const auto& o : rt.orbits) CHECK(o.sats.size() == 4);
    }
}

TEST_CASE("runs are deterministic") {
    const Scenario s = small(Mode::Dnc);
    const RunResult a = Simulator(s).run();
    const RunResult b = Simulator(s).run();
    CHECK(trace_digest(a) == trace_digest(b));
    CHECK(trace_digest(a).size() == 16);
    Scenario other = s;
    other.simulation.seed = 2;
    CHECK(trace_digest(Simulator(other).run()) != trace_digest(a));
}

TEST_CASE("termination rules") {
    Scenario s = small(Mode::Dnc);
    s.termination.max_rounds = 5;
    s.termination.target_accuracy = 0.5;
    RunResult r = Simulator(s).run();
    CHECK(r.stop == StopReason::TargetAccuracy);
    CHECK(r.rounds.size() == 1);
    CHECK(r.time_to_accuracy(0.5) == r.rounds[0].end_s);

    s.termination.target_accuracy.reset();
    s.termination.param_delta = 1e9;
    r = Simulator(s).run();
    CHECK(r.stop == StopReason::ParamDelta);
    CHECK(r.rounds.size() == 1);

    s.termination.param_delta.reset();
    s.simulation.horizon_hours = 0.5;
    r = Simulator(s).run();
    CHECK(r.stop == StopReason::HorizonExhausted);
    CHECK(!r.error.empty());
}

TEST_CASE("zero orbital epochs") {
    Scenario s = small(Mode::Dnc);
    s.protocol.orbital_epochs = 0;
    s.termination.max_rounds = 1;
    const RunResult r = Simulator(s).run();
    REQUIRE(r.rounds.size() == 1);
    CHECK(r.rounds[0].param_delta == 0.0);
    CHECK(std::abs(r.rounds[0].duration_s() - r.rounds[0].closed_form_s) <= 1e-6);
}

TEST_CASE("invalid scenario is rejected by the simulator") {
    Scenario s = small(Mode::Dnc);
    s.training.batch_size = 0;
    CHECK_THROWS_AS(Simulator{s}, ValidationError);
}

TEST_CASE("trace outputs") {
    const Scenario s = small(Mode::Dnc);
    const RunResult r = Simulator(s).run();
    const auto j = trace_json(r);
    CHECK(j["mode"] == "dnc");
    CHECK(j["rounds"].size() == 2);
    CHECK(trace_json_text(r).back() == '\n');
    const std::string csv = trace_csv(r);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    const std::string summary = summary_text(r, s);
    CHECK(summary.find("rounds: 2\n") != std::string::npos);
    CHECK(summary.find("ps_uplinks: 4\n") != std::string::npos);
    CHECK(accuracy_svg(r).rfind("<svg", 0) == 0);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}
