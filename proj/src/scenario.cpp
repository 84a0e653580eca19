#include "orbitfl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "orbitfl/error.hpp"

namespace orbitfl {

ComputeParams Scenario::compute_params() const {
    ComputeParams cp = compute;
    cp.batch_size = training.batch_size;
    cp.epochs = training.epochs;
    return cp;
}

WindowSearch Scenario::window_search() const {
    return {simulation.horizon_hours * 3600.0, simulation.window_step_s, simulation.window_tolerance_s};
}

std::vector<std::string> validate(const Scenario& s) {
    std::vector<std::string> errors;
    auto check = [&](bool ok, const char* path, const char* message) {
        if (!ok) errors.push_back(fmt::format("{}: {}", path, message));
    };
    const auto& c = s.constellation;
    check(c.num_orbits >= 1, "constellation.num_orbits", "must be >= 1");
    check(c.sats_per_orbit >= 1, "constellation.sats_per_orbit", "must be >= 1");
    check(c.altitude_km > 0 && c.altitude_km < 2000, "constellation.altitude_km", "altitude out of range (0, 2000)");
    check(c.inclination_deg >= 0 && c.inclination_deg <= 180, "constellation.inclination_deg",
          "inclination out of range [0, 180]");

    const auto& g = s.ground_station;
    check(g.latitude_deg >= -90 && g.latitude_deg <= 90, "ground_station.latitude_deg", "latitude out of range");
    check(g.longitude_deg >= -180 && g.longitude_deg <= 360, "ground_station.longitude_deg", "longitude out of range");
    check(g.altitude_km >= 0 && g.altitude_km < c.altitude_km, "ground_station.altitude_km",
          "must be >= 0 and below the orbit");
    check(g.min_elevation_deg >= 0 && g.min_elevation_deg <= 90, "ground_station.min_elevation_deg",
          "min_elevation out of range [0, 90]");

    const auto& l = s.link;
    check(l.bandwidth_hz > 0, "link.bandwidth_ghz", "must be > 0");
    check(l.noise_temp_k > 0, "link.noise_temp_k", "must be > 0");
    check(l.wavelength_m > 0, "link.wavelength_mm", "must be > 0");
    check(l.max_data_rate_bps > 0, "link.max_data_rate_mbps", "must be > 0");
    check(l.max_los_distance_km >= 0, "link.max_los_distance_km", "must be >= 0");
    check(s.isl.bandwidth_hz > 0, "isl.bandwidth_mhz", "must be > 0");
    check(s.isl.spectral_efficiency > 0, "isl.spectral_efficiency_bps_per_hz", "must be > 0");

    const auto& cp = s.compute;
    check(cp.cpu_cores >= 1, "compute.cpu_cores", "must be >= 1");
    check(cp.clock_hz > 0, "compute.clock_ghz", "must be > 0");
    check(cp.cycles_per_batch >= 0, "compute.cycles_per_batch", "must be >= 0");
    check(cp.overhead_cycles >= 0, "compute.overhead_cycles", "must be >= 0");
    check(cp.filter_cycles_per_image >= 0, "compute.filter_cycles_per_image", "must be >= 0");

    const auto& t = s.training;
    check(t.learning_rate > 0 && std::isfinite(t.learning_rate), "training.learning_rate", "must be > 0");
    check(t.batch_size >= 1, "training.batch_size", "must be >= 1");
    check(t.epochs >= 1, "training.epochs", "must be >= 1");
    check(t.loss_threshold > 0, "training.loss_threshold", "must be > 0");
    check(t.value_bits >= 1, "training.value_bits", "must be >= 1");
    check(s.protocol.orbital_epochs >= 0, "training.orbital_epochs", "must be >= 0");
    check(s.protocol.negative_ratio >= 0, "training.negative_ratio", "must be >= 0");

    const auto& d = s.dataset;
    check(d.num_classes >= 1, "dataset.num_classes", "must be >= 1");
    check(d.dominant_fraction >= 0 && d.dominant_fraction <= 1, "dataset.dominant_fraction", "must be in [0, 1]");
    if (d.source == DataSource::Synthetic) {
        check(d.dims >= 1, "dataset.dims", "must be >= 1");
        check(d.train_per_class >= 1, "dataset.train_per_class", "must be >= 1");
        check(d.test_per_class >= 1, "dataset.test_per_class", "must be >= 1");
        check(d.spread > 0, "dataset.spread", "must be > 0");
        check(d.separation >= 0, "dataset.separation", "must be >= 0");
    } else {
        check(!d.train_path.empty(), "dataset.train_path", "required when source is file");
        check(!d.test_path.empty(), "dataset.test_path", "required when source is file");
    }

    const auto& sim = s.simulation;
    check(sim.horizon_hours > 0, "simulation.horizon_hours", "must be > 0");
    check(sim.window_step_s > 0, "simulation.window_step_s", "must be > 0");
    check(sim.window_tolerance_s > 0, "simulation.window_tolerance_s", "must be > 0");

    const auto& term = s.termination;
    check(!term.empty(), "termination", "at least one of max_rounds, target_accuracy, param_delta is required");
    if (term.max_rounds) check(*term.max_rounds >= 1, "termination.max_rounds", "must be >= 1");
    if (term.target_accuracy)
        check(*term.target_accuracy >= 0 && *term.target_accuracy <= 1, "termination.target_accuracy",
              "must be in [0, 1]");
    if (term.param_delta) check(*term.param_delta >= 0, "termination.param_delta", "must be >= 0");
    return errors;
}

namespace {

template <typename E>
using Names = std::vector<std::pair<const char*, E>>;

const Names<IslTimeMode> kIslModes = {{"linear", IslTimeMode::Linear}, {"triangular", IslTimeMode::Triangular}};
const Names<AggregateAt> kAggregateAt = {{"alternate", AggregateAt::Alternate}, {"sink_only", AggregateAt::SinkOnly}};
const Names<DataSource> kSources = {{"synthetic", DataSource::Synthetic}, {"file", DataSource::File}};
const Names<Partition> kPartitions = {{"dominant", Partition::Dominant}, {"iid", Partition::Iid}};
const Names<Mode> kModes = {{"star", Mode::Star}, {"dnc", Mode::Dnc}};

// Every key of the file format, visited in document order. Unit-suffixed keys
// carry a scale to the internal SI-like unit.
template <typename Visitor>
void visit_fields(Scenario& s, Visitor& v) {
    v.section("constellation");
    v.field("num_orbits", s.constellation.num_orbits);
    v.field("sats_per_orbit", s.constellation.sats_per_orbit);
    v.field("altitude_km", s.constellation.altitude_km);
    v.field("inclination_deg", s.constellation.inclination_deg);
    v.field("raan_spacing_deg", s.constellation.raan_spacing_deg);
    v.field("phase_offset_deg", s.constellation.phase_offset_deg);
    v.field("epoch_s", s.constellation.epoch_s);

    v.section("ground_station");
    v.field("latitude_deg", s.ground_station.latitude_deg);
    v.field("longitude_deg", s.ground_station.longitude_deg);
    v.field("altitude_km", s.ground_station.altitude_km);
    v.field("min_elevation_deg", s.ground_station.min_elevation_deg);

    v.section("link");
    v.field("tx_power_dbm", s.link.tx_power_dbm);
    v.field("gain_sat_dbi", s.link.gain_sat_dbi);
    v.field("gain_ps_dbi", s.link.gain_ps_dbi);
    v.field("noise_temp_k", s.link.noise_temp_k);
    v.scaled("bandwidth_ghz", s.link.bandwidth_hz, 1e9);
    v.scaled("wavelength_mm", s.link.wavelength_m, 1e-3);
    v.scaled("max_data_rate_mbps", s.link.max_data_rate_bps, 1e6);
    v.field("max_los_distance_km", s.link.max_los_distance_km);

    v.section("isl");
    v.scaled("bandwidth_mhz", s.isl.bandwidth_hz, 1e6);
    v.field("spectral_efficiency_bps_per_hz", s.isl.spectral_efficiency);
    v.choice("time_mode", s.isl.time_mode, kIslModes);

    v.section("compute");
    v.field("cpu_cores", s.compute.cpu_cores);
    v.scaled("clock_ghz", s.compute.clock_hz, 1e9);
    v.field("cycles_per_batch", s.compute.cycles_per_batch);
    v.field("overhead_cycles", s.compute.overhead_cycles);
    v.field("filter_cycles_per_image", s.compute.filter_cycles_per_image);

    v.section("training");
    v.field("learning_rate", s.training.learning_rate);
    v.field("batch_size", s.training.batch_size);
    v.field("epochs", s.training.epochs);
    v.field("loss_threshold", s.training.loss_threshold);
    v.field("value_bits", s.training.value_bits);
    v.field("negative_ratio", s.protocol.negative_ratio);
    v.field("orbital_epochs", s.protocol.orbital_epochs);
    v.choice("aggregate_at", s.protocol.aggregate_at, kAggregateAt);
    v.field("count_final_broadcast", s.protocol.count_final_broadcast);

    v.section("dataset");
    v.choice("source", s.dataset.source, kSources);
    v.field("dims", s.dataset.dims);
    v.field("num_classes", s.dataset.num_classes);
    v.field("train_per_class", s.dataset.train_per_class);
    v.field("test_per_class", s.dataset.test_per_class);
    v.field("separation", s.dataset.separation);
    v.field("spread", s.dataset.spread);
    v.choice("partition", s.dataset.partition, kPartitions);
    v.field("dominant_fraction", s.dataset.dominant_fraction);
    v.field("train_path", s.dataset.train_path);
    v.field("test_path", s.dataset.test_path);

    v.section("simulation");
    v.choice("mode", s.protocol.mode, kModes);
    v.field("horizon_hours", s.simulation.horizon_hours);
    v.field("window_step_s", s.simulation.window_step_s);
    v.field("window_tolerance_s", s.simulation.window_tolerance_s);
    v.field("seed", s.simulation.seed);

    v.section("termination");
    v.field("max_rounds", s.termination.max_rounds);
    v.field("target_accuracy", s.termination.target_accuracy);
    v.field("param_delta", s.termination.param_delta);
}

class Reader {
public:
    explicit Reader(YAML::Node root) : root_(std::move(root)), root_is_map_(root_.IsMap()) {}

    void section(const char* name) {
        name_ = name;
        const YAML::Node& root = root_;
        node_.reset(root_is_map_ && root[name] ? root[name] : YAML::Node(YAML::NodeType::Undefined));
        known_sections_.insert(name);
        if (node_ && !node_.IsMap()) error(name_, "must be a mapping");
    }

    template <typename T>
    void field(const char* key, T& out) {
        if (auto n = lookup(key)) read(*n, key, out);
    }

    template <typename T>
    void field(const char* key, std::optional<T>& out) {
        auto n = lookup(key);
        if (!n) return;
        if (n->IsNull()) {
            out.reset();
            return;
        }
        T value{};
        if (read(*n, key, value)) out = value;
    }

    void scaled(const char* key, double& out, double scale) {
        double value = 0.0;
        if (auto n = lookup(key); n && read(*n, key, value)) out = value * scale;
    }

    template <typename E>
    void choice(const char* key, E& out, const Names<E>& names) {
        auto n = lookup(key);
        if (!n) return;
        std::string text;
        if (!read(*n, key, text)) return;
        for (const auto& [name, value] : names) {
            if (text == name) {
                out = value;
                return;
            }
        }
        std::string allowed;
        for (const auto& [name, value] : names) allowed += allowed.empty() ? name : fmt::format("|{}", name);
        error(path(key), fmt::format("unknown value '{}' (expected {})", text, allowed));
    }

    std::vector<std::string> finish() {
        if (root_ && !root_.IsNull() && !root_is_map_) {
            errors_.push_back("<root>: scenario must be a mapping");
            return errors_;
        }
        for (const auto& top : root_) {
            const auto name = top.first.as<std::string>();
            if (!known_sections_.count(name)) {
                error(name, "unknown section");
                continue;
            }
            if (!top.second.IsMap()) continue;
            for (const auto& kv : top.second) {
                const auto key = kv.first.as<std::string>();
                if (!seen_.count(name + "." + key)) error(name + "." + key, "unknown key");
            }
        }
        return errors_;
    }

private:
    std::string path(const char* key) const { return fmt::format("{}.{}", name_, key); }

    std::optional<YAML::Node> lookup(const char* key) {
        if (!node_ || !node_.IsMap()) return std::nullopt;
        seen_.insert(path(key));
        YAML::Node n = node_[key];
        if (!n) return std::nullopt;
        return n;
    }

    template <typename T>
    bool read(const YAML::Node& n, const char* key, T& out) {
        try {
            if constexpr (std::is_same_v<T, bool>) {
                out = n.as<bool>();
            } else if constexpr (std::is_integral_v<T>) {
                // Accept 1e6-style integers but reject fractional values.
                const double value = n.as<double>();
                if (value != std::floor(value)) throw YAML::Exception(n.Mark(), "not an integer");
                out = static_cast<T>(value);
            } else {
                out = n.as<T>();
            }
            return true;
        } catch (const YAML::Exception&) {
            error(path(key), fmt::format("cannot parse '{}'", n.IsScalar() ? n.Scalar() : std::string("<non-scalar>")));
            return false;
        }
    }

    void error(const std::string& where, const std::string& message) {
        errors_.push_back(fmt::format("{}: {}", where, message));
    }

    YAML::Node root_;
    bool root_is_map_ = false;
    YAML::Node node_;
    std::string name_;
    std::set<std::string> known_sections_;
    std::set<std::string> seen_;
    std::vector<std::string> errors_;
};

class Writer {
public:
    Writer() { out_ << YAML::BeginMap; }

    void section(const char* name) {
        if (open_) out_ << YAML::EndMap;
        out_ << YAML::Key << name << YAML::Value << YAML::BeginMap;
        open_ = true;
    }

    template <typename T>
    void field(const char* key, T& value) {
        out_ << YAML::Key << key << YAML::Value;
        if constexpr (std::is_same_v<T, double>) out_ << fmt::format("{}", value);
        else if constexpr (std::is_same_v<T, std::string>) out_ << YAML::DoubleQuoted << value;
        else out_ << value;
    }

    template <typename T>
    void field(const char* key, std::optional<T>& value) {
        out_ << YAML::Key << key << YAML::Value;
        if (!value) out_ << YAML::Null;
        else if constexpr (std::is_same_v<T, double>) out_ << fmt::format("{}", *value);
        else out_ << *value;
    }

    void scaled(const char* key, double& value, double scale) {
        out_ << YAML::Key << key << YAML::Value << fmt::format("{}", value / scale);
    }

    template <typename E>
    void choice(const char* key, E& value, const Names<E>& names) {
        for (const auto& [name, v] : names)
            if (v == value) out_ << YAML::Key << key << YAML::Value << name;
    }

    std::string str() {
        if (open_) out_ << YAML::EndMap;
        out_ << YAML::EndMap;
        open_ = false;
        return std::string(out_.c_str()) + "\n";
    }

private:
    YAML::Emitter out_;
    bool open_ = false;
};

}  // namespace

Scenario parse_scenario(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ValidationError({fmt::format("<root>: YAML syntax error: {}", e.what())});
    }
    Scenario s;
    Reader reader(root);
    visit_fields(s, reader);
    auto errors = reader.finish();
    if (errors.empty()) errors = validate(s);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError({fmt::format("{}: cannot open scenario file", path)});
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

std::string dump_scenario(const Scenario& scenario) {
    Scenario copy = scenario;
    Writer writer;
    visit_fields(copy, writer);
    return writer.str();
}

}  // namespace orbitfl
