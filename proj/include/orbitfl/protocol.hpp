#pragma once

// Intra-orbit relay topology and the learning steps of the two protocols:
// personalized one-vs-all training with orbital relay/retraining (dnc) and the
// star-topology FedAvg baseline. Time is owned by the event engine in sim.hpp;
// the functions here are pure given their seeds.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orbitfl/constellation.hpp"
#include "orbitfl/learning.hpp"
#include "orbitfl/link.hpp"
#include "orbitfl/timing.hpp"

namespace orbitfl {

enum class Mode { Star, Dnc };

enum class AggregateAt { Alternate, SinkOnly };

enum class Phase { Distribute, LocalTrain, ForwardCollect, OrbitalAggregate, ReverseRelay, Upload, GlobalAggregate };

std::string_view phase_name(Phase phase);
std::string_view mode_name(Mode mode);

struct RelayTopology {
    int orbit = 0;
    std::vector<SatelliteId> ring;  // slot order
    SatelliteId source;
    SatelliteId sink;

    int size() const { return static_cast<int>(ring.size()); }
    int position(SatelliteId sat) const;
    /// Same ring with source and sink exchanged (the reverse relay).
    RelayTopology reversed() const;
};

/// Sink is the node floor(I/2) positions after the source.
RelayTopology make_topology(std::vector<SatelliteId> ring, SatelliteId source);

/// Satellite of `ring` whose next window starts first at or after t (currently
/// visible counts as t); ties go to the smaller slot. Throws HorizonExhausted.
SatelliteId select_source(std::span<const SatelliteId> ring, const WindowTable& windows, double t);

struct RelaySchedule {
    std::vector<int> hop_distance;    // per ring position
    std::vector<double> arrival_s;    // per ring position, relative to the source send
    int hops = 0;                     // ceil(I/2)
    int bfs_depth = 0;                // floor(I/2)
    long messages = 0;
};

/// Bilateral flood from the source: ring distance k arrives at k hop times.
RelaySchedule relay_forward(const RelayTopology& topology, double payload_bits, const IslParams& isl);

struct CollectResult {
    std::vector<Contribution> at_sink;  // one per origin, origin order
    long copies_received = 0;           // including duplicates dropped at the sink
    long messages = 0;                  // model transmissions over ISLs
    double completion_s = 0.0;          // after the last local model is ready
};

/// Pipelined convergecast along both ring arms toward the sink. Each node
/// forwards everything it holds plus its own model; the source's model travels
/// both arms and the duplicate is removed at the sink.
CollectResult collect_to_sink(const RelayTopology& topology, std::span<const Contribution> models,
                              const IslParams& isl);

/// Per-satellite personalized data: one filtered set per assigned class.
struct SatelliteTasks {
    SatelliteId sat;
    std::vector<FilteredDataset> tasks;
    std::vector<int> skipped_classes;  // assigned but absent from the local data
    long dataset_size = 0;

    long filtered_size() const;
    std::vector<long> class_distribution(int num_classes) const;
};

struct UploadPackage {
    int orbit = 0;
    ModelParams model;
    long total_filtered = 0;
    std::map<SatelliteId, std::vector<long>> class_distribution;

    /// 8-byte total plus, per satellite, a 4-byte id and L 4-byte counts.
    double metadata_bytes() const;
};

struct OrbitalOptions {
    int orbital_epochs = 5;
    AggregateAt aggregate_at = AggregateAt::Alternate;
    double loss_threshold = 0.1;
};

struct EpochRecord {
    int epoch = 0;
    SatelliteId aggregator;
    ModelParams model;
};

struct OrbitalRoundResult {
    UploadPackage package;
    std::vector<EpochRecord> epochs;
    std::vector<Phase> phases;
    std::map<SatelliteId, double> flops;
    std::vector<std::string> warnings;
    long isl_messages = 0;
};

/// Trains every tasked satellite of the orbit on `start` (binary mode on its
/// task rows) and aggregates at the epoch's holder. `epoch` is 1-based.
struct EpochOutcome {
    ModelParams model;
    SatelliteId aggregator;
    long messages = 0;
    std::vector<std::string> warnings;
};
EpochOutcome orbital_epoch(const RelayTopology& topology, const ModelParams& start,
                           std::span<const SatelliteTasks> tasked, int epoch, const TrainConfig& tc,
                           const OrbitalOptions& options, const IslParams& isl, std::uint64_t seed,
                           std::map<SatelliteId, double>& flops);

/// Relay and orbital retraining for one orbit and one global round, without timing.
OrbitalRoundResult orbital_round(const RelayTopology& topology, const ModelParams& global,
                                 std::span<const SatelliteTasks> tasked, const TrainConfig& tc,
                                 const OrbitalOptions& options, const IslParams& isl, std::uint64_t seed);

/// w = sum_n (m_n / sum m) w_n over the orbital uploads.
ModelParams global_aggregate(std::span<const UploadPackage> packages);

/// Builds each tasked satellite's filtered datasets. A class assigned to a
/// satellite holding no sample of it is listed in skipped_classes instead.
std::vector<SatelliteTasks> personalize(std::span<const SatelliteId> ring, std::span<const Dataset> local_data,
                                        int num_classes, double negative_ratio,
                                        std::span<const double> compute_fraction, std::uint64_t seed);

/// Local FedAvg step: multiclass SGD from the global model on the satellite's full data.
ModelParams star_local_update(const ModelParams& global, const Dataset& local, const TrainConfig& tc,
                              std::uint64_t seed, FlopMeter* meter = nullptr);

}  // namespace orbitfl
