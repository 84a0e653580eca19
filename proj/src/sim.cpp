#include "orbitfl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "orbitfl/error.hpp"

namespace orbitfl {

namespace {

// Stream tags for derive_seed.
enum : std::uint64_t { kTagTrainData = 1, kTagTestData, kTagPartition, kTagFilter, kTagOrbital, kTagStar };

constexpr double kClosedFormTolerance = 1e-6;

std::uint64_t u64(int v) { return static_cast<std::uint64_t>(v); }

}  // namespace

std::string_view event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::WindowOpen: return "WindowOpen";
        case EventKind::WindowClose: return "WindowClose";
        case EventKind::ModelArrived: return "ModelArrived";
        case EventKind::TrainDone: return "TrainDone";
        case EventKind::AggregateDone: return "AggregateDone";
        case EventKind::UploadDone: return "UploadDone";
        case EventKind::RoundDone: return "RoundDone";
    }
    return "?";
}

std::string_view stop_reason_name(StopReason reason) {
    switch (reason) {
        case StopReason::None: return "none";
        case StopReason::TargetAccuracy: return "target_accuracy";
        case StopReason::ParamDelta: return "param_delta";
        case StopReason::MaxRounds: return "max_rounds";
        case StopReason::HorizonExhausted: return "horizon_exhausted";
    }
    return "?";
}

// --- event queue ---------------------------------------------------------------

std::uint64_t EventQueue::schedule(double time, EventKind kind, SatelliteId sat, std::function<void()> action) {
    if (!(time >= now_)) {
        throw std::logic_error(fmt::format("causality violation: {} scheduled at {:.9f} s before clock {:.9f} s",
                                           event_kind_name(kind), time, now_));
    }
    const std::uint64_t seq = next_sequence_++;
    heap_.push(Event{time, seq, kind, sat, std::move(action)});
    return seq;
}

std::size_t EventQueue::run() {
    std::size_t handled = 0;
    while (!heap_.empty()) {
        Event event = heap_.top();
        heap_.pop();
        now_ = event.time;
        if (observer_) observer_(event);
        spdlog::debug("t={:.3f} {} ({},{})", event.time, event_kind_name(event.kind), event.sat.orbit, event.sat.slot);
        if (event.action) event.action();
        ++handled;
    }
    return handled;
}

void EventQueue::clear() {
    heap_ = {};
}

// --- workload -----------------------------------------------------------------------

Workload build_workload(const Scenario& s) {
    Workload w;
    const auto& spec = s.dataset;
    const std::uint64_t seed = s.simulation.seed;
    if (spec.source == DataSource::Synthetic) {
        BlobSpec blobs{spec.dims, spec.num_classes, spec.train_per_class, spec.separation, spec.spread};
        w.train = make_blobs(blobs, derive_seed(seed, {kTagTrainData}));
        blobs.per_class = spec.test_per_class;
        w.test = make_blobs(blobs, derive_seed(seed, {kTagTestData}));
    } else {
        w.train = load_ofl(spec.train_path);
        w.test = load_ofl(spec.test_path);
        std::vector<std::string> problems;
        if (w.train.num_classes != spec.num_classes)
            problems.push_back(fmt::format("dataset.num_classes: {} but {} has {}", spec.num_classes, spec.train_path,
                                           w.train.num_classes));
        if (w.test.num_classes != w.train.num_classes || w.test.dims() != w.train.dims())
            problems.push_back("dataset.test_path: shape differs from the training file");
        if (!problems.empty()) throw ValidationError(std::move(problems));
    }
    const auto parts =
        partition_dataset(w.train, s.constellation, spec.partition, spec.dominant_fraction, derive_seed(seed, {kTagPartition}));
    w.local.reserve(parts.size());
    for (const auto& idx : parts) w.local.push_back(w.train.subset(idx));
    return w;
}

std::optional<double> RunResult::time_to_accuracy(double target) const {
    for (const auto& r : rounds)
        if (r.accuracy >= target) return r.end_s;
    return std::nullopt;
}

// --- simulator -------------------------------------------------------------------------

Simulator::Simulator(Scenario scenario, std::shared_ptr<const WindowTable> windows,
                     std::shared_ptr<const Workload> workload)
    : scenario_(std::move(scenario)), windows_(std::move(windows)), workload_(std::move(workload)) {
    if (auto problems = validate(scenario_); !problems.empty()) throw ValidationError(std::move(problems));
    link_ = resolve_link(scenario_.link, scenario_.constellation.altitude_km, scenario_.ground_station.min_elevation_deg,
                         scenario_.ground_station.altitude_km);
    compute_ = scenario_.compute_params();
    period_s_ = orbital_period(scenario_.constellation.altitude_km);
    if (!windows_) windows_ = make_windows(scenario_);
    if (!workload_) workload_ = std::make_shared<const Workload>(build_workload(scenario_));
    if (workload_->local.size() != static_cast<std::size_t>(scenario_.constellation.num_satellites())) {
        throw ShapeMismatch("workload does not match the constellation size");
    }
}

std::shared_ptr<const WindowTable> Simulator::make_windows(const Scenario& scenario) {
    return std::make_shared<const WindowTable>(
        WindowTable::compute(scenario.constellation, scenario.ground_station, scenario.window_search()));
}

double Simulator::model_bits() const {
    return static_cast<double>(scenario_.dataset.num_classes) * (workload_->train.dims() + 1) *
           scenario_.training.value_bits;
}

std::vector<SatelliteId> Simulator::ring(int orbit) const {
    std::vector<SatelliteId> out;
    for (int k = 0; k < scenario_.constellation.sats_per_orbit; ++k) out.push_back({orbit, k});
    return out;
}

const Dataset& Simulator::local(SatelliteId sat) const {
    return workload_->local[static_cast<std::size_t>(sat.orbit * scenario_.constellation.sats_per_orbit + sat.slot)];
}

std::vector<SatelliteTasks> Simulator::tasks_for(int round, int orbit) const {
    const auto sats = ring(orbit);
    std::vector<Dataset> data;
    for (const auto& sat : sats) data.push_back(local(sat));
    return personalize(sats, data, scenario_.dataset.num_classes, scenario_.protocol.negative_ratio, {},
                       derive_seed(scenario_.simulation.seed, {kTagFilter, u64(round), u64(orbit)}));
}

std::vector<SatLoad> Simulator::loads_of(std::span<const SatelliteTasks> tasks) {
    std::vector<SatLoad> loads;
    for (const auto& st : tasks)
        if (!st.tasks.empty()) loads.push_back({st.sat, st.dataset_size, st.filtered_size()});
    return loads;
}

ClosedForm Simulator::closed_form(int round, double t0) const {
    ClosedForm cf;
    cf.mode = scenario_.protocol.mode;
    cf.t0 = t0;
    const double bits = model_bits();
    for (int n = 0; n < scenario_.constellation.num_orbits; ++n) {
        double orbit_time = 0.0;
        if (cf.mode == Mode::Star) {
            std::vector<SatLoad> loads;
            for (const auto& sat : ring(n)) loads.push_back({sat, local(sat).size(), local(sat).size()});
            cf.star.push_back(orbit_star_timings(loads, bits, *windows_, link_, compute_, t0, period_s_));
            orbit_time = orbit_star_time(cf.star.back());
        } else {
            const auto tasks = tasks_for(round, n);
            const auto loads = loads_of(tasks);
            const auto sats = ring(n);
            cf.relay.push_back(orbit_relay_time(n, sats, loads, scenario_.protocol.orbital_epochs, bits, scenario_.isl,
                                                link_, compute_, *windows_, t0,
                                                {scenario_.protocol.count_final_broadcast}));
            orbit_time = cf.relay.back().t_total;
        }
        cf.orbit_s.push_back(orbit_time);
    }
    cf.total_s = cf.mode == Mode::Star ? star_round_time(cf.orbit_s) : relay_round_time(cf.orbit_s);
    return cf;
}

RoundTrace Simulator::star_round(int round, double t0, ModelParams& global, EventQueue& q) const {
    const int num_orbits = scenario_.constellation.num_orbits;
    const int per_orbit = scenario_.constellation.sats_per_orbit;
    const double bits = model_bits();
    const auto& tc = scenario_.training;

    struct SatState {
        double start = 0.0;
        double wait = 0.0;
        VisibilityWindow window;
        ExchangeTiming link;
        double t_filter = 0.0;
        double t_train = 0.0;
        int revolutions = 0;
    };
    std::vector<SatState> state(static_cast<std::size_t>(num_orbits * per_orbit));
    std::vector<Contribution> updates;
    std::map<SatelliteId, double> flops;

    RoundTrace rt;
    rt.round = round;
    rt.start_s = t0;
    rt.orbits.resize(static_cast<std::size_t>(num_orbits));
    int remaining = num_orbits;

    std::function<void(int, int, double)> begin;
    begin = [&](int n, int k, double cursor) {
        const SatelliteId sat{n, k};
        auto& st = state[static_cast<std::size_t>(n * per_orbit + k)];
        const WindowMatch match = windows_->next(sat, cursor);
        st.start = cursor;
        st.wait = match.wait;
        st.window = match.window;
        q.schedule(cursor + match.wait, EventKind::WindowOpen, sat, [&, sat, n, k] {
            auto& s = state[static_cast<std::size_t>(n * per_orbit + k)];
            const Dataset& data = local(sat);
            s.link = exchange_timing(s.window, bits, link_);
            s.t_filter = filter_time(data.size(), compute_);
            s.t_train = train_time(data.size(), compute_);
            const double expected = q.now() + 2.0 * (s.link.t_trans + s.link.t_prop) + s.t_filter + s.t_train;
            if (s.window.end < expected) {
                q.schedule(s.window.end, EventKind::WindowClose, sat,
                           [sat] { spdlog::debug("pass of ({},{}) closed before its exchange", sat.orbit, sat.slot); });
            }
            q.schedule(q.now() + s.link.t_trans + s.link.t_prop, EventKind::ModelArrived, sat, [&, sat, n, k] {
                auto& s2 = state[static_cast<std::size_t>(n * per_orbit + k)];
                const Dataset& d = local(sat);
                if (d.size() > 0) {
                    FlopMeter meter;
                    const auto seed = derive_seed(scenario_.simulation.seed, {kTagStar, u64(round), u64(n), u64(k)});
                    updates.push_back({sat, star_local_update(global, d, tc, seed, &meter), static_cast<double>(d.size())});
                    flops[sat] += meter.flops;
                }
                q.schedule(q.now() + s2.t_filter + s2.t_train, EventKind::TrainDone, sat, [&, sat, n, k] {
                    auto& s3 = state[static_cast<std::size_t>(n * per_orbit + k)];
                    const double trained = q.now();
                    RoundTiming timing = compose_round_timing(s3.wait, s3.link.t_trans, s3.link.t_prop, s3.t_filter,
                                                              s3.t_train);
                    timing.t_visible = s3.window.duration();
                    if (timing.misses_window()) {
                        const auto& list = windows_->of(sat);
                        auto next = std::find_if(list.begin(), list.end(),
                                                 [&](const VisibilityWindow& w) { return w.start > trained; });
                        if (next == list.end()) {
                            throw HorizonExhausted(fmt::format("no pass of ({},{}) after t={:.1f} s", sat.orbit,
                                                               sat.slot, trained));
                        }
                        s3.revolutions = std::max(1, static_cast<int>(std::floor((next->start - trained) / period_s_)));
                        timing.revolutions = s3.revolutions;
                    }
                    // Anchored to the satellite's start: the alpha * t_wait term
                    // scales any drift in the start time by alpha.
                    q.schedule(s3.start + timing.penalized_total(), EventKind::UploadDone, sat,
                               [&, sat, n, k] {
                                   auto& s4 = state[static_cast<std::size_t>(n * per_orbit + k)];
                                   auto& orbit = rt.orbits[static_cast<std::size_t>(n)];
                                   SatRoundTrace sr;
                                   sr.sat = sat;
                                   sr.start_s = s4.start;
                                   sr.end_s = q.now();
                                   sr.timing = compose_round_timing(s4.wait, s4.link.t_trans, s4.link.t_prop,
                                                                    s4.t_filter, s4.t_train);
                                   sr.timing.t_visible = s4.window.duration();
                                   sr.timing.revolutions = s4.revolutions;
                                   orbit.sats.push_back(sr);
                                   if (k + 1 < per_orbit) {
                                       begin(n, k + 1, q.now());
                                       return;
                                   }
                                   orbit.end_s = q.now();
                                   if (--remaining == 0) {
                                       q.schedule(q.now(), EventKind::RoundDone, {}, [&] { rt.end_s = q.now(); });
                                   }
                               });
                });
            });
        });
    };

    for (int n = 0; n < num_orbits; ++n) {
        rt.orbits[static_cast<std::size_t>(n)].orbit = n;
        rt.orbits[static_cast<std::size_t>(n)].start_s = t0;
        begin(n, 0, t0);
    }
    rt.events = q.run();

    if (!updates.empty()) global = aggregate(updates);
    const long links = static_cast<long>(num_orbits) * per_orbit;
    rt.uplinks = links;
    rt.downlinks = links;
    rt.bytes_up = static_cast<double>(links) * bits / 8.0;
    rt.bytes_down = rt.bytes_up;
    for (const auto& [sat, f] : flops) {
        rt.total_flops += f;
        rt.max_sat_flops = std::max(rt.max_sat_flops, f);
    }
    return rt;
}

RoundTrace Simulator::dnc_round(int round, double t0, ModelParams& global, EventQueue& q) const {
    const int num_orbits = scenario_.constellation.num_orbits;
    const int per_orbit = scenario_.constellation.sats_per_orbit;
    const int epochs = scenario_.protocol.orbital_epochs;
    const double bits = model_bits();
    const double t_relay = isl_relay_time(bits, relay_hops(per_orbit), scenario_.isl);
    const OrbitalOptions options{epochs, scenario_.protocol.aggregate_at, scenario_.training.loss_threshold};

    struct OrbitState {
        std::vector<SatelliteTasks> tasks;
        RelayTopology topology;
        ModelParams current;
        EpochOutcome outcome;
        int pending = 0;
        double t_filter = 0.0;
        UploadPackage package;
    };
    std::vector<OrbitState> orbits(static_cast<std::size_t>(num_orbits));
    std::map<SatelliteId, double> flops;

    RoundTrace rt;
    rt.round = round;
    rt.start_s = t0;
    rt.orbits.resize(static_cast<std::size_t>(num_orbits));
    int remaining = num_orbits;

    auto trace_of = [&](int n) -> OrbitTrace& { return rt.orbits[static_cast<std::size_t>(n)]; };
    auto state_of = [&](int n) -> OrbitState& { return orbits[static_cast<std::size_t>(n)]; };

    std::function<void(int, int)> start_epoch;
    std::function<void(int, double)> upload;

    start_epoch = [&](int n, int v) {
        auto& os = state_of(n);
        trace_of(n).phases.push_back(Phase::LocalTrain);
        const auto seed = derive_seed(scenario_.simulation.seed, {kTagOrbital, u64(round), u64(n)});
        os.outcome = orbital_epoch(os.topology, os.current, os.tasks, v, scenario_.training, options, scenario_.isl,
                                   seed, flops);
        auto aggregated = [&, n, v] {
            auto& o = state_of(n);
            auto& tr = trace_of(n);
            tr.phases.push_back(Phase::ForwardCollect);
            tr.phases.push_back(Phase::OrbitalAggregate);
            tr.isl_messages += o.outcome.messages;
            tr.aggregators.push_back(o.outcome.aggregator);
            rt.warnings.insert(rt.warnings.end(), o.outcome.warnings.begin(), o.outcome.warnings.end());
            o.current = o.outcome.model;
            const auto from_holder = make_topology(o.topology.ring, o.outcome.aggregator);
            if (v < epochs) {
                tr.phases.push_back(Phase::ReverseRelay);
                tr.isl_messages += relay_forward(from_holder, bits, scenario_.isl).messages;
                q.schedule(q.now() + t_relay, EventKind::ModelArrived, o.topology.source, [&, n, v] { start_epoch(n, v + 1); });
                return;
            }
            double ready = q.now();
            if (scenario_.protocol.count_final_broadcast) {
                tr.isl_messages += relay_forward(from_holder, bits, scenario_.isl).messages;
                ready += t_relay;
            }
            upload(n, ready);
        };
        os.pending = 0;
        for (const auto& st : os.tasks)
            if (!st.tasks.empty()) ++os.pending;
        if (os.pending == 0) {
            q.schedule(q.now(), EventKind::AggregateDone, os.outcome.aggregator, aggregated);
            return;
        }
        for (const auto& st : os.tasks) {
            if (st.tasks.empty()) continue;
            q.schedule(q.now() + train_time(st.filtered_size(), compute_), EventKind::TrainDone, st.sat,
                       [&, n, aggregated] {
                           auto& o = state_of(n);
                           if (--o.pending == 0) q.schedule(q.now(), EventKind::AggregateDone, o.outcome.aggregator, aggregated);
                       });
        }
    };

    upload = [&](int n, double ready) {
        auto& os = state_of(n);
        auto up = first_visible(os.topology.ring, *windows_, ready);
        if (!up) throw HorizonExhausted(fmt::format("orbit {}: no satellite visible for upload after t={:.1f} s", n, ready));
        const SatelliteId uploader = up->first;
        const VisibilityWindow window = up->second.window;
        q.schedule(ready + up->second.wait, EventKind::WindowOpen, uploader, [&, n, uploader, window] {
            const ExchangeTiming link = exchange_timing(window, bits, link_);
            q.schedule(q.now() + link.t_trans + link.t_prop, EventKind::UploadDone, uploader, [&, n] {
                auto& o = state_of(n);
                auto& tr = trace_of(n);
                tr.phases.push_back(Phase::Upload);
                tr.end_s = q.now();
                o.package.orbit = n;
                o.package.model = o.current;
                for (const auto& st : o.tasks) {
                    if (st.tasks.empty()) continue;
                    o.package.total_filtered += st.filtered_size();
                    o.package.class_distribution[st.sat] = st.class_distribution(scenario_.dataset.num_classes);
                }
                if (--remaining == 0) q.schedule(q.now(), EventKind::RoundDone, {}, [&] { rt.end_s = q.now(); });
            });
        });
    };

    for (int n = 0; n < num_orbits; ++n) {
        auto& os = state_of(n);
        auto& tr = trace_of(n);
        tr.orbit = n;
        tr.start_s = t0;
        os.tasks = tasks_for(round, n);
        os.current = global;
        for (const auto& st : os.tasks) {
            for (int c : st.skipped_classes)
                rt.warnings.push_back(fmt::format("sat ({},{}) holds no sample of class {}; task skipped", st.sat.orbit,
                                                  st.sat.slot, c));
            if (!st.tasks.empty()) os.t_filter = std::max(os.t_filter, filter_time(st.dataset_size, compute_));
        }
        const auto sats = ring(n);
        auto src = first_visible(sats, *windows_, t0);
        if (!src) throw HorizonExhausted(fmt::format("orbit {}: no satellite visible after t={:.1f} s", n, t0));
        os.topology = make_topology(sats, src->first);
        const VisibilityWindow window = src->second.window;
        q.schedule(t0 + src->second.wait, EventKind::WindowOpen, src->first, [&, n, window] {
            const ExchangeTiming link = exchange_timing(window, bits, link_);
            q.schedule(q.now() + link.t_trans + link.t_prop, EventKind::ModelArrived, state_of(n).topology.source, [&, n] {
                auto& o = state_of(n);
                auto& t = trace_of(n);
                t.phases.push_back(Phase::Distribute);
                if (epochs == 0) {
                    upload(n, q.now() + o.t_filter);
                    return;
                }
                t.isl_messages += relay_forward(o.topology, bits, scenario_.isl).messages;
                q.schedule(q.now() + o.t_filter + t_relay, EventKind::ModelArrived, o.topology.sink,
                           [&, n] { start_epoch(n, 1); });
            });
        });
    }
    rt.events = q.run();

    std::vector<UploadPackage> packages;
    for (int n = 0; n < num_orbits; ++n) {
        packages.push_back(state_of(n).package);
        trace_of(n).phases.push_back(Phase::GlobalAggregate);
        rt.isl_messages += trace_of(n).isl_messages;
        rt.metadata_bytes += packages.back().metadata_bytes();
    }
    global = global_aggregate(packages);
    rt.uplinks = num_orbits;
    rt.downlinks = num_orbits;
    rt.bytes_down = num_orbits * bits / 8.0;
    rt.bytes_up = rt.bytes_down + rt.metadata_bytes;
    for (const auto& [sat, f] : flops) {
        rt.total_flops += f;
        rt.max_sat_flops = std::max(rt.max_sat_flops, f);
    }
    return rt;
}

RunResult Simulator::run() {
    const auto& s = scenario_;
    RunResult res;
    res.mode = s.protocol.mode;
    res.seed = s.simulation.seed;
    ModelParams global = ModelParams::zeros(s.dataset.num_classes, workload_->train.dims(), s.training.value_bits);
    res.initial_accuracy = evaluate(global, workload_->test).accuracy;

    EventQueue queue;
    queue.set_observer(observer_);
    double t = 0.0;
    for (int round = 1;; ++round) {
        const ModelParams before = global;
        RoundTrace rt;
        try {
            rt = s.protocol.mode == Mode::Star ? star_round(round, t, global, queue) : dnc_round(round, t, global, queue);
        } catch (const HorizonExhausted& e) {
            queue.clear();
            res.stop = StopReason::HorizonExhausted;
            res.error = e.what();
            spdlog::warn("round {}: {}", round, e.what());
            break;
        }
        const ClosedForm cf = closed_form(round, t);
        rt.closed_form_s = cf.total_s;
        for (std::size_t n = 0; n < rt.orbits.size(); ++n) {
            rt.orbits[n].closed_form_s = cf.orbit_s[n];
            if (cf.mode == Mode::Dnc) rt.orbits[n].relay = cf.relay[n];
        }
        if (std::abs(rt.duration_s() - cf.total_s) > kClosedFormTolerance) {
            throw std::logic_error(fmt::format("round {}: event time {:.9f} s differs from closed form {:.9f} s", round,
                                               rt.duration_s(), cf.total_s));
        }

        const Metrics m = evaluate(global, workload_->test);
        rt.accuracy = m.accuracy;
        rt.macro_precision = m.macro_precision();
        rt.macro_recall = m.macro_recall();
        rt.macro_f1 = m.macro_f1();
        rt.param_delta = (global.weights - before.weights).norm();
        spdlog::info("round {} [{}]: {:.2f} h -> {:.2f} h, accuracy {:.4f}, {} warnings", round, mode_name(res.mode),
                     rt.start_s / 3600.0, rt.end_s / 3600.0, rt.accuracy, rt.warnings.size());
        t = rt.end_s;
        res.rounds.push_back(std::move(rt));

        const auto& last = res.rounds.back();
        const auto& term = s.termination;
        if (term.target_accuracy && last.accuracy >= *term.target_accuracy) res.stop = StopReason::TargetAccuracy;
        else if (term.param_delta && last.param_delta <= *term.param_delta) res.stop = StopReason::ParamDelta;
        else if (term.max_rounds && round >= *term.max_rounds) res.stop = StopReason::MaxRounds;
        if (res.stop != StopReason::None) break;
    }
    res.model = global;
    res.metrics = evaluate(global, workload_->test);
    return res;
}

// --- serialization -------------------------------------------------------------------

namespace {

nlohmann::json sat_json(SatelliteId sat) {
    return nlohmann::json::array({sat.orbit, sat.slot});
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

}  // namespace

nlohmann::json trace_json(const RunResult& r) {
    using nlohmann::json;
    json rounds = json::array();
    for (const auto& rt : r.rounds) {
        json orbits = json::array();
        for (const auto& o : rt.orbits) {
            json phases = json::array();
            for (auto p : o.phases) phases.push_back(std::string(phase_name(p)));
            json aggregators = json::array();
            for (auto a : o.aggregators) aggregators.push_back(sat_json(a));
            json jo = {{"orbit", o.orbit},
                       {"start_s", o.start_s},
                       {"end_s", o.end_s},
                       {"duration_s", o.duration_s()},
                       {"closed_form_s", o.closed_form_s},
                       {"phases", phases},
                       {"aggregators", aggregators},
                       {"isl_messages", o.isl_messages}};
            if (o.relay) {
                const auto& x = *o.relay;
                jo["relay"] = {{"source", sat_json(x.source)},   {"uploader", sat_json(x.uploader)},
                               {"epochs", x.epochs},             {"hops", x.hops},
                               {"t_wait", x.t_wait},             {"t_trans_down", x.t_trans_down},
                               {"t_prop_down", x.t_prop_down},   {"t_filter", x.t_filter},
                               {"t_train", x.t_train},           {"t_relay", x.t_relay},
                               {"t_broadcast", x.t_broadcast},   {"t_wait_upload", x.t_wait_upload},
                               {"t_trans_up", x.t_trans_up},     {"t_prop_up", x.t_prop_up},
                               {"t_total", x.t_total}};
            }
            if (!o.sats.empty()) {
                json sats = json::array();
                for (const auto& s : o.sats) {
                    sats.push_back({{"sat", sat_json(s.sat)},
                                    {"start_s", s.start_s},
                                    {"end_s", s.end_s},
                                    {"t_wait", s.timing.t_wait},
                                    {"t_trans", s.timing.t_trans},
                                    {"t_prop", s.timing.t_prop},
                                    {"t_filter", s.timing.t_filter},
                                    {"t_train", s.timing.t_train},
                                    {"t_req", s.timing.t_total},
                                    {"t_visible", s.timing.t_visible},
                                    {"revolutions", s.timing.revolutions}});
                }
                jo["sats"] = sats;
            }
            orbits.push_back(jo);
        }
        rounds.push_back({{"round", rt.round},
                          {"start_s", rt.start_s},
                          {"end_s", rt.end_s},
                          {"duration_s", rt.duration_s()},
                          {"closed_form_s", rt.closed_form_s},
                          {"uplinks", rt.uplinks},
                          {"downlinks", rt.downlinks},
                          {"bytes_up", rt.bytes_up},
                          {"bytes_down", rt.bytes_down},
                          {"metadata_bytes", rt.metadata_bytes},
                          {"isl_messages", rt.isl_messages},
                          {"total_flops", rt.total_flops},
                          {"max_sat_flops", rt.max_sat_flops},
                          {"accuracy", rt.accuracy},
                          {"macro_precision", rt.macro_precision},
                          {"macro_recall", rt.macro_recall},
                          {"macro_f1", rt.macro_f1},
                          {"param_delta", rt.param_delta},
                          {"events", rt.events},
                          {"warnings", rt.warnings},
                          {"orbits", orbits}});
    }
    json confusion = json::array();
    for (Eigen::Index i = 0; i < r.metrics.confusion.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < r.metrics.confusion.cols(); ++j) row.push_back(r.metrics.confusion(i, j));
        confusion.push_back(row);
    }
    return {{"mode", std::string(mode_name(r.mode))},
            {"seed", r.seed},
            {"initial_accuracy", r.initial_accuracy},
            {"stop_reason", std::string(stop_reason_name(r.stop))},
            {"error", r.error},
            {"final",
             {{"accuracy", r.metrics.accuracy},
              {"precision", vector_json(r.metrics.precision)},
              {"recall", vector_json(r.metrics.recall)},
              {"f1", vector_json(r.metrics.f1)},
              {"confusion", confusion}}},
            {"rounds", rounds}};
}

std::string trace_json_text(const RunResult& result) {
    return trace_json(result).dump(2) + "\n";
}

std::string trace_csv(const RunResult& r) {
    std::string out =
        "round,start_s,end_s,duration_s,closed_form_s,uplinks,downlinks,bytes_up,bytes_down,isl_messages,"
        "total_flops,max_sat_flops,accuracy,macro_precision,macro_recall,macro_f1,param_delta,warnings\n";
    for (const auto& rt : r.rounds) {
        out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{:.0f},{:.0f},{},{:.0f},{:.0f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6g},{}\n",
                           rt.round, rt.start_s, rt.end_s, rt.duration_s(), rt.closed_form_s, rt.uplinks, rt.downlinks,
                           rt.bytes_up, rt.bytes_down, rt.isl_messages, rt.total_flops, rt.max_sat_flops, rt.accuracy,
                           rt.macro_precision, rt.macro_recall, rt.macro_f1, rt.param_delta, rt.warnings.size());
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string trace_digest(const RunResult& result) {
    return fmt::format("{:016x}", fnv1a64(trace_json_text(result)));
}

}  // namespace orbitfl
