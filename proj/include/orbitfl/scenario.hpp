#pragma once

// A runnable scenario: every physical, compute and learning parameter plus the
// dataset, protocol mode and termination rule. Defaults reproduce the reference
// setting (6 x 10 Walker Delta at 530 km, 85 deg, station in Rolla, MO).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orbitfl/constellation.hpp"
#include "orbitfl/learning.hpp"
#include "orbitfl/link.hpp"
#include "orbitfl/protocol.hpp"
#include "orbitfl/timing.hpp"

namespace orbitfl {

enum class DataSource { Synthetic, File };

struct DatasetSpec {
    DataSource source = DataSource::Synthetic;
    int dims = 2;
    int num_classes = 10;
    int train_per_class = 3600;
    int test_per_class = 200;
    double separation = 8.0;
    double spread = 1.0;
    Partition partition = Partition::Dominant;
    double dominant_fraction = 0.8;
    std::string train_path;
    std::string test_path;
};

struct ProtocolConfig {
    Mode mode = Mode::Dnc;
    int orbital_epochs = 5;
    AggregateAt aggregate_at = AggregateAt::Alternate;
    bool count_final_broadcast = false;
    double negative_ratio = 1.0;
};

struct Termination {
    std::optional<int> max_rounds = 10;
    std::optional<double> target_accuracy;
    std::optional<double> param_delta;

    bool empty() const { return !max_rounds && !target_accuracy && !param_delta; }
};

struct SimulationConfig {
    double horizon_hours = 240.0;
    double window_step_s = 1.0;
    double window_tolerance_s = 0.1;
    std::uint64_t seed = 1;
};

struct Scenario {
    ConstellationConfig constellation;
    GroundStation ground_station;
    LinkParams link;
    IslParams isl;
    ComputeParams compute;
    TrainConfig training;
    ProtocolConfig protocol;
    DatasetSpec dataset;
    SimulationConfig simulation;
    Termination termination;

    /// Compute parameters with kappa and J taken from the training section.
    ComputeParams compute_params() const;
    WindowSearch window_search() const;
};

/// Field-path-prefixed messages, e.g. "training.batch_size: must be >= 1".
/// Empty when the scenario is valid.
std::vector<std::string> validate(const Scenario& scenario);

/// Parses a YAML scenario; absent keys keep their defaults and unknown keys are
/// errors. Throws ValidationError listing every problem found.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& yaml_text);

/// YAML text that round-trips through parse_scenario.
std::string dump_scenario(const Scenario& scenario);

}  // namespace orbitfl
