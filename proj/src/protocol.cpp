#include "orbitfl/protocol.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "orbitfl/error.hpp"

namespace orbitfl {

std::string_view phase_name(Phase phase) {
    switch (phase) {
        case Phase::Distribute: return "Distribute";
        case Phase::LocalTrain: return "LocalTrain";
        case Phase::ForwardCollect: return "ForwardCollect";
        case Phase::OrbitalAggregate: return "OrbitalAggregate";
        case Phase::ReverseRelay: return "ReverseRelay";
        case Phase::Upload: return "Upload";
        case Phase::GlobalAggregate: return "GlobalAggregate";
    }
    return "?";
}

std::string_view mode_name(Mode mode) {
    return mode == Mode::Star ? "star" : "dnc";
}

int RelayTopology::position(SatelliteId sat) const {
    auto it = std::find(ring.begin(), ring.end(), sat);
    if (it == ring.end()) throw DomainError(fmt::format("satellite ({},{}) not in orbit {}", sat.orbit, sat.slot, orbit));
    return static_cast<int>(it - ring.begin());
}

RelayTopology RelayTopology::reversed() const {
    RelayTopology out = *this;
    std::swap(out.source, out.sink);
    return out;
}

RelayTopology make_topology(std::vector<SatelliteId> ring, SatelliteId source) {
    if (ring.empty()) throw DomainError("make_topology: empty ring");
    RelayTopology topo;
    topo.orbit = ring.front().orbit;
    topo.ring = std::move(ring);
    topo.source = source;
    const int n = topo.size();
    topo.sink = topo.ring[static_cast<std::size_t>((topo.position(source) + n / 2) % n)];
    return topo;
}

SatelliteId select_source(std::span<const SatelliteId> ring, const WindowTable& windows, double t) {
    auto best = first_visible(ring, windows, t);
    if (!best) throw HorizonExhausted(fmt::format("select_source: no window after t={:.1f} s", t));
    return best->first;
}

RelaySchedule relay_forward(const RelayTopology& topology, double payload_bits, const IslParams& isl) {
    const int n = topology.size();
    const int src = topology.position(topology.source);
    const double hop = isl_hop_time(payload_bits, isl);
    RelaySchedule out;
    out.hops = relay_hops(n);
    out.bfs_depth = n / 2;
    out.hop_distance.resize(static_cast<std::size_t>(n));
    out.arrival_s.resize(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
        const int k = ((p - src) % n + n) % n;
        const int dist = std::min(k, n - k);
        out.hop_distance[static_cast<std::size_t>(p)] = dist;
        out.arrival_s[static_cast<std::size_t>(p)] = dist * hop;
    }
    // Flooding: every informed node sends to each neighbor not yet informed.
    // An even ring's antipode is reached from both sides; an odd ring's two
    // farthest nodes are informed together and stay silent.
    if (n == 1) out.messages = 0;
    else if (n == 2) out.messages = 1;
    else out.messages = n % 2 == 0 ? n : n - 1;
    return out;
}

CollectResult collect_to_sink(const RelayTopology& topology, std::span<const Contribution> models,
                              const IslParams& isl) {
    const int n = topology.size();
    const int sink = topology.position(topology.sink);
    const int src = topology.position(topology.source);
    auto owned = [&](int pos) {
        std::vector<const Contribution*> mine;
        for (const auto& c : models)
            if (c.origin == topology.ring[static_cast<std::size_t>(pos)]) mine.push_back(&c);
        return mine;
    };

    CollectResult out;
    std::vector<Contribution> received;
    for (const auto* c : owned(sink)) received.push_back(*c);

    // Arm lengths from the source to the sink in each direction.
    const int cw = ((sink - src) % n + n) % n;
    std::vector<std::pair<int, int>> arms;  // (direction toward sink, hops)
    if (n == 2) arms.emplace_back(+1, 1);
    else if (n > 2) {
        arms.emplace_back(+1, cw);
        arms.emplace_back(-1, n - cw);
    }
    int longest = 0;
    for (auto [dir, length] : arms) {
        longest = std::max(longest, length);
        std::vector<Contribution> bundle;
        for (int step = 0; step < length; ++step) {
            const int pos = ((src + dir * step) % n + n) % n;
            for (const auto* c : owned(pos)) bundle.push_back(*c);
            out.messages += static_cast<long>(bundle.size());
        }
        out.copies_received += static_cast<long>(bundle.size());
        received.insert(received.end(), bundle.begin(), bundle.end());
    }

    // Deduplicate by origin, keeping one copy per satellite in origin order.
    std::stable_sort(received.begin(), received.end(),
                     [](const Contribution& a, const Contribution& b) { return a.origin < b.origin; });
    for (auto& c : received) {
        if (out.at_sink.empty() || out.at_sink.back().origin != c.origin) out.at_sink.push_back(std::move(c));
    }
    const double bits = models.empty() ? 0.0 : models.front().model.size_bits();
    out.completion_s = longest > 0 && bits > 0 ? isl_relay_time(bits, longest, isl) : 0.0;
    return out;
}

long SatelliteTasks::filtered_size() const {
    long total = 0;
    for (const auto& t : tasks) total += t.size();
    return total;
}

std::vector<long> SatelliteTasks::class_distribution(int num_classes) const {
    std::vector<long> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto& t : tasks)
        for (int y : t.source_labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

double UploadPackage::metadata_bytes() const {
    double bytes = 8.0;
    for (const auto& [sat, dist] : class_distribution) bytes += 4.0 + 4.0 * static_cast<double>(dist.size());
    return bytes;
}

std::vector<SatelliteTasks> personalize(std::span<const SatelliteId> ring, std::span<const Dataset> local_data,
                                        int num_classes, double negative_ratio,
                                        std::span<const double> compute_fraction, std::uint64_t seed) {
    if (ring.size() != local_data.size()) throw ShapeMismatch("personalize: one dataset per satellite required");
    const auto assignment = assign_tasks(ring, num_classes, compute_fraction);
    std::vector<SatelliteTasks> out;
    for (std::size_t k = 0; k < ring.size(); ++k) {
        auto it = assignment.find(ring[k]);
        if (it == assignment.end()) continue;
        SatelliteTasks st;
        st.sat = ring[k];
        st.dataset_size = local_data[k].size();
        const auto counts = local_data[k].class_counts();
        for (int c : it->second) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                st.skipped_classes.push_back(c);
                continue;
            }
            const auto s = derive_seed(seed, {static_cast<std::uint64_t>(ring[k].orbit),
                                              static_cast<std::uint64_t>(ring[k].slot), static_cast<std::uint64_t>(c)});
            st.tasks.push_back(filter(local_data[k], {c, negative_ratio, s}));
        }
        out.push_back(std::move(st));
    }
    return out;
}

EpochOutcome orbital_epoch(const RelayTopology& topology, const ModelParams& start,
                           std::span<const SatelliteTasks> tasked, int epoch, const TrainConfig& tc,
                           const OrbitalOptions& options, const IslParams& isl, std::uint64_t seed,
                           std::map<SatelliteId, double>& flops) {
    std::vector<Contribution> locals;
    EpochOutcome out;
    for (const auto& st : tasked) {
        if (st.tasks.empty()) continue;
        ModelParams model = start;
        FlopMeter meter;
        for (const auto& task : st.tasks) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(st.sat.orbit), static_cast<std::uint64_t>(st.sat.slot),
                                       static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(task.target_class)}));
            model = train_binary(std::move(model), task.target_class, task, tc, rng, &meter);
            if (!check_local_convergence(model, task.target_class, task, options.loss_threshold)) {
                out.warnings.push_back(fmt::format("sat ({},{}) class {} epoch {}: local loss >= tau",
                                                   st.sat.orbit, st.sat.slot, task.target_class, epoch));
            }
        }
        flops[st.sat] += meter.flops;
        locals.push_back({st.sat, std::move(model), static_cast<double>(st.filtered_size())});
    }
    const bool at_sink = options.aggregate_at == AggregateAt::SinkOnly || epoch % 2 == 1;
    const RelayTopology route = at_sink ? topology : topology.reversed();
    out.aggregator = route.sink;
    if (locals.empty()) {
        out.model = start;
        return out;
    }
    CollectResult collected = collect_to_sink(route, locals, isl);
    out.messages = collected.messages;
    out.model = aggregate(collected.at_sink);
    return out;
}

OrbitalRoundResult orbital_round(const RelayTopology& topology, const ModelParams& global,
                                 std::span<const SatelliteTasks> tasked, const TrainConfig& tc,
                                 const OrbitalOptions& options, const IslParams& isl, std::uint64_t seed) {
    OrbitalRoundResult out;
    const double bits = global.size_bits();
    out.phases.push_back(Phase::Distribute);
    out.isl_messages += relay_forward(topology, bits, isl).messages;

    ModelParams current = global;
    for (int v = 1; v <= options.orbital_epochs; ++v) {
        out.phases.push_back(Phase::LocalTrain);
        out.phases.push_back(Phase::ForwardCollect);
        EpochOutcome epoch = orbital_epoch(topology, current, tasked, v, tc, options, isl, seed, out.flops);
        out.phases.push_back(Phase::OrbitalAggregate);
        out.isl_messages += epoch.messages;
        out.warnings.insert(out.warnings.end(), epoch.warnings.begin(), epoch.warnings.end());
        current = std::move(epoch.model);
        out.epochs.push_back({v, epoch.aggregator, current});
        if (v < options.orbital_epochs) {
            out.phases.push_back(Phase::ReverseRelay);
            out.isl_messages += relay_forward(make_topology(topology.ring, epoch.aggregator), bits, isl).messages;
        }
    }
    out.phases.push_back(Phase::Upload);
    out.phases.push_back(Phase::GlobalAggregate);

    out.package.orbit = topology.orbit;
    out.package.model = std::move(current);
    for (const auto& st : tasked) {
        out.package.total_filtered += st.filtered_size();
        out.package.class_distribution[st.sat] = st.class_distribution(global.num_classes());
    }
    return out;
}

ModelParams global_aggregate(std::span<const UploadPackage> packages) {
    if (packages.empty()) throw DomainError("global_aggregate: no orbital models");
    long total = 0;
    for (const auto& p : packages) total += p.total_filtered;
    std::vector<Contribution> contributions;
    for (const auto& p : packages) {
        const double weight = total > 0 ? static_cast<double>(p.total_filtered) : 1.0;
        contributions.push_back({SatelliteId{p.orbit, 0}, p.model, weight});
    }
    return aggregate(contributions);
}

ModelParams star_local_update(const ModelParams& global, const Dataset& local, const TrainConfig& tc,
                              std::uint64_t seed, FlopMeter* meter) {
    Rng rng(seed);
    return train_multiclass(global, local, tc, rng, meter);
}

}  // namespace orbitfl
