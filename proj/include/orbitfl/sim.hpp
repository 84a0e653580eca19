#pragma once

// Discrete-event engine. A single logical clock advances through events popped
// in (time, sequence) order; each global round is a chain of events per orbit
// whose handlers perform the learning steps. The round's completion time is
// checked against the closed-form timing on every round.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "orbitfl/protocol.hpp"
#include "orbitfl/scenario.hpp"

namespace orbitfl {

enum class EventKind { WindowOpen, WindowClose, ModelArrived, TrainDone, AggregateDone, UploadDone, RoundDone };

std::string_view event_kind_name(EventKind kind);

struct Event {
    double time = 0.0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::RoundDone;
    SatelliteId sat;
    std::function<void()> action;
};

class EventQueue {
public:
    /// Throws std::logic_error when `time` precedes the current clock.
    std::uint64_t schedule(double time, EventKind kind, SatelliteId sat, std::function<void()> action);

    /// Pops and runs events until the queue is empty; returns how many ran.
    std::size_t run();

    double now() const { return now_; }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    void clear();
    void set_observer(std::function<void(const Event&)> observer) { observer_ = std::move(observer); }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::function<void(const Event&)> observer_;
    double now_ = 0.0;
    std::uint64_t next_sequence_ = 0;
};

/// Training and test data plus each satellite's local share (all_satellites order).
struct Workload {
    Dataset train;
    Dataset test;
    std::vector<Dataset> local;
};

Workload build_workload(const Scenario& scenario);

struct SatRoundTrace {
    SatelliteId sat;
    double start_s = 0.0;
    double end_s = 0.0;
    RoundTiming timing;
};

struct OrbitTrace {
    int orbit = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double closed_form_s = 0.0;
    std::vector<SatRoundTrace> sats;        // star mode
    std::optional<OrbitRelayTiming> relay;  // dnc mode
    std::vector<Phase> phases;
    std::vector<SatelliteId> aggregators;   // per orbital epoch
    long isl_messages = 0;

    double duration_s() const { return end_s - start_s; }
};

struct RoundTrace {
    int round = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double closed_form_s = 0.0;
    std::vector<OrbitTrace> orbits;
    long uplinks = 0;
    long downlinks = 0;
    double bytes_up = 0.0;
    double bytes_down = 0.0;
    double metadata_bytes = 0.0;
    long isl_messages = 0;
    double total_flops = 0.0;
    double max_sat_flops = 0.0;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double param_delta = 0.0;
    std::size_t events = 0;
    std::vector<std::string> warnings;

    double duration_s() const { return end_s - start_s; }
};

enum class StopReason { None, TargetAccuracy, ParamDelta, MaxRounds, HorizonExhausted };

std::string_view stop_reason_name(StopReason reason);

struct RunResult {
    Mode mode = Mode::Dnc;
    std::uint64_t seed = 0;
    double initial_accuracy = 0.0;
    std::vector<RoundTrace> rounds;
    ModelParams model;
    Metrics metrics;
    StopReason stop = StopReason::None;
    std::string error;

    double simulated_s() const { return rounds.empty() ? 0.0 : rounds.back().end_s; }
    /// Simulated time at the end of the first round whose accuracy reaches
    /// `target`, if any.
    std::optional<double> time_to_accuracy(double target) const;
};

/// Closed-form round time at `t0` with every orbit's components.
struct ClosedForm {
    Mode mode = Mode::Dnc;
    double t0 = 0.0;
    double total_s = 0.0;
    std::vector<double> orbit_s;
    std::vector<std::vector<RoundTiming>> star;  // per orbit, per satellite
    std::vector<OrbitRelayTiming> relay;         // per orbit
};

class Simulator {
public:
    /// Windows and workload may be shared between simulators of the same
    /// constellation, station and dataset (for example across seeds).
    explicit Simulator(Scenario scenario, std::shared_ptr<const WindowTable> windows = nullptr,
                       std::shared_ptr<const Workload> workload = nullptr);

    static std::shared_ptr<const WindowTable> make_windows(const Scenario& scenario);

    RunResult run();

    /// Closed-form time of global round `round` starting at `t0`.
    ClosedForm closed_form(int round, double t0) const;

    const Scenario& scenario() const { return scenario_; }
    const WindowTable& windows() const { return *windows_; }
    const Workload& workload() const { return *workload_; }
    double model_bits() const;

    void set_event_observer(std::function<void(const Event&)> observer) { observer_ = std::move(observer); }

private:
    RoundTrace star_round(int round, double t0, ModelParams& global, EventQueue& queue) const;
    RoundTrace dnc_round(int round, double t0, ModelParams& global, EventQueue& queue) const;
    std::vector<SatelliteId> ring(int orbit) const;
    const Dataset& local(SatelliteId sat) const;
    std::vector<SatelliteTasks> tasks_for(int round, int orbit) const;
    static std::vector<SatLoad> loads_of(std::span<const SatelliteTasks> tasks);

    Scenario scenario_;
    std::shared_ptr<const WindowTable> windows_;
    std::shared_ptr<const Workload> workload_;
    LinkParams link_;
    ComputeParams compute_;
    double period_s_ = 0.0;
    std::function<void(const Event&)> observer_;
};

nlohmann::json trace_json(const RunResult& result);
std::string trace_json_text(const RunResult& result);
std::string trace_csv(const RunResult& result);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a of trace_json_text, as 16 hex digits.
std::string trace_digest(const RunResult& result);

}  // namespace orbitfl
