#include "orbitfl/learning.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "orbitfl/error.hpp"

namespace orbitfl {

std::vector<long> Dataset::class_counts() const {
    std::vector<long> counts(static_cast<std::size_t>(num_classes), 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

Dataset Dataset::subset(std::span<const long> indices) const {
    Dataset out;
    out.num_classes = num_classes;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        out.features.row(static_cast<Eigen::Index>(k)) = features.row(indices[k]);
        out.labels.push_back(labels[static_cast<std::size_t>(indices[k])]);
    }
    return out;
}

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data;
    data.num_classes = spec.num_classes;
    const long n = static_cast<long>(spec.num_classes) * spec.per_class;
    data.features.resize(n, spec.dims);
    data.labels.reserve(static_cast<std::size_t>(n));
    long row = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        Eigen::VectorXd center = Eigen::VectorXd::Zero(spec.dims);
        const double angle = kTwoPi * c / spec.num_classes;
        if (spec.dims >= 2) {
            center(0) = spec.separation * std::cos(angle);
            center(1) = spec.separation * std::sin(angle);
        } else {
            center(0) = spec.separation * c;
        }
        for (int k = 0; k < spec.per_class; ++k, ++row) {
            for (int j = 0; j < spec.dims; ++j) data.features(row, j) = center(j) + spec.spread * rng.normal();
            data.labels.push_back(c);
        }
    }
    return data;
}

namespace {

template <typename T>
void write_le(std::ostream& os, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& path) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
        throw Error(fmt::format("{}: truncated OFL1 file", path));
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

Dataset load_ofl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("{}: cannot open", path));
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "OFL1", 4) != 0) throw Error(fmt::format("{}: bad magic", path));
    const auto n = read_le<std::uint32_t>(in, path);
    const auto d = read_le<std::uint32_t>(in, path);
    const auto num_classes = read_le<std::uint32_t>(in, path);
    Dataset data;
    data.num_classes = static_cast<int>(num_classes);
    data.features.resize(n, d);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < d; ++j) data.features(i, j) = read_le<float>(in, path);
    data.labels.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto y = read_le<std::uint16_t>(in, path);
        if (y >= num_classes) throw Error(fmt::format("{}: label {} out of range", path, y));
        data.labels.push_back(y);
    }
    return data;
}

void save_ofl(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("{}: cannot open for writing", path));
    out.write("OFL1", 4);
    write_le(out, static_cast<std::uint32_t>(data.size()));
    write_le(out, static_cast<std::uint32_t>(data.dims()));
    write_le(out, static_cast<std::uint32_t>(data.num_classes));
    for (long i = 0; i < data.size(); ++i)
        for (int j = 0; j < data.dims(); ++j) write_le(out, static_cast<float>(data.features(i, j)));
    for (int y : data.labels) write_le(out, static_cast<std::uint16_t>(y));
}

std::vector<std::vector<long>> partition_dataset(const Dataset& data, const ConstellationConfig& cfg,
                                                 Partition partition, double dominant_fraction, std::uint64_t seed) {
    const auto sats = static_cast<std::size_t>(cfg.num_satellites());
    std::vector<std::vector<long>> out(sats);
    Rng rng(seed);

    if (partition == Partition::Iid) {
        std::vector<long> order(static_cast<std::size_t>(data.size()));
        std::iota(order.begin(), order.end(), 0L);
        rng.shuffle(std::span<long>(order));
        for (std::size_t k = 0; k < order.size(); ++k) out[k % sats].push_back(order[k]);
    } else {
        std::vector<std::vector<long>> by_class(static_cast<std::size_t>(data.num_classes));
        for (long i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);
        for (int c = 0; c < data.num_classes; ++c) {
            auto& members = by_class[static_cast<std::size_t>(c)];
            rng.shuffle(std::span<long>(members));
            std::vector<std::size_t> holders, others;
            for (std::size_t s = 0; s < sats; ++s) {
                const int slot = static_cast<int>(s) % cfg.sats_per_orbit;
                (slot % data.num_classes == c ? holders : others).push_back(s);
            }
            // A class nobody specializes in is spread over everyone.
            if (holders.empty()) holders.swap(others);
            const double fraction = others.empty() ? 1.0 : dominant_fraction;
            const auto dominant = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
            for (std::size_t k = 0; k < members.size(); ++k) {
                if (k < dominant) out[holders[k % holders.size()]].push_back(members[k]);
                else out[others[(k - dominant) % others.size()]].push_back(members[k]);
            }
        }
        for (auto& list : out) std::sort(list.begin(), list.end());
    }
    return out;
}

FilteredDataset filter(const Dataset& data, const FilterPolicy& policy) {
    if (policy.target_class < 0 || policy.target_class >= data.num_classes) {
        throw DomainError(fmt::format("filter: target class {} outside [0, {})", policy.target_class, data.num_classes));
    }
    std::vector<long> positives, negatives;
    for (long i = 0; i < data.size(); ++i) {
        (data.labels[static_cast<std::size_t>(i)] == policy.target_class ? positives : negatives).push_back(i);
    }
    if (positives.empty()) {
        throw DomainError(fmt::format("filter: no samples of target class {}", policy.target_class));
    }
    const auto wanted = static_cast<std::size_t>(std::floor(policy.negative_ratio * static_cast<double>(positives.size())));
    const std::size_t keep = std::min(wanted, negatives.size());
    // Partial Fisher-Yates draws `keep` negatives without replacement.
    Rng rng(policy.seed);
    for (std::size_t k = 0; k < keep; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(negatives.size() - k));
        std::swap(negatives[k], negatives[j]);
    }
    negatives.resize(keep);

    std::vector<long> chosen = positives;
    chosen.insert(chosen.end(), negatives.begin(), negatives.end());
    std::sort(chosen.begin(), chosen.end());

    FilteredDataset out;
    out.target_class = policy.target_class;
    out.positives = static_cast<long>(positives.size());
    out.features.resize(static_cast<Eigen::Index>(chosen.size()), data.features.cols());
    out.targets.resize(static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t k = 0; k < chosen.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        out.features.row(row) = data.features.row(chosen[k]);
        const int label = data.labels[static_cast<std::size_t>(chosen[k])];
        out.targets(row) = label == policy.target_class ? 1.0 : 0.0;
        out.source_labels.push_back(label);
    }
    return out;
}

namespace {

std::vector<Eigen::Index> shuffled_order(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    rng.shuffle(std::span<Eigen::Index>(order));
    return order;
}

void require_finite(double loss, const char* what) {
    if (!std::isfinite(loss)) throw Divergence(fmt::format("{}: loss became non-finite", what));
}

}  // namespace

ModelParams train_binary(ModelParams model, int row, const FilteredDataset& data, const TrainConfig& tc, Rng& rng,
                         FlopMeter* meter) {
    if (data.size() == 0) throw DomainError("train_binary: empty dataset");
    if (data.features.cols() != model.dims()) throw ShapeMismatch("train_binary: feature dimension mismatch");
    if (row < 0 || row >= model.num_classes()) throw DomainError("train_binary: row out of range");

    Eigen::VectorXd w = model.weights.row(row).transpose();
    const Eigen::Index n = data.size();
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const auto order = shuffled_order(n, rng);
        for (Eigen::Index begin = 0; begin < n; begin += tc.batch_size) {
            const Eigen::Index count = std::min<Eigen::Index>(tc.batch_size, n - begin);
            Eigen::MatrixXd xb(count, data.features.cols());
            Eigen::VectorXd tb(count);
            for (Eigen::Index k = 0; k < count; ++k) {
                xb.row(k) = data.features.row(order[static_cast<std::size_t>(begin + k)]);
                tb(k) = data.targets(order[static_cast<std::size_t>(begin + k)]);
            }
            w -= tc.learning_rate * binary_gradient(w, xb, tb);
        }
        require_finite(binary_loss(w, data.features, data.targets), "train_binary");
    }
    model.weights.row(row) = w.transpose();
    if (meter) meter->flops += flops_estimate(model.dims() + 1, n, tc.epochs);
    return model;
}

ModelParams train_multiclass(ModelParams model, const Dataset& data, const TrainConfig& tc, Rng& rng,
                             FlopMeter* meter) {
    if (data.size() == 0) throw DomainError("train_multiclass: empty dataset");
    if (data.dims() != model.dims() || data.num_classes != model.num_classes()) {
        throw ShapeMismatch("train_multiclass: model and data shapes differ");
    }
    const Eigen::Index n = data.size();
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const auto order = shuffled_order(n, rng);
        for (Eigen::Index begin = 0; begin < n; begin += tc.batch_size) {
            const Eigen::Index count = std::min<Eigen::Index>(tc.batch_size, n - begin);
            Eigen::MatrixXd xb(count, data.features.cols());
            std::vector<int> yb(static_cast<std::size_t>(count));
            for (Eigen::Index k = 0; k < count; ++k) {
                const auto src = order[static_cast<std::size_t>(begin + k)];
                xb.row(k) = data.features.row(src);
                yb[static_cast<std::size_t>(k)] = data.labels[static_cast<std::size_t>(src)];
            }
            model.weights -= tc.learning_rate * softmax_gradient(model.weights, xb, std::span<const int>(yb));
        }
        require_finite(softmax_loss(model.weights, data.features, std::span<const int>(data.labels)),
                       "train_multiclass");
    }
    if (meter) meter->flops += flops_estimate(model.num_params(), n, tc.epochs);
    return model;
}

std::map<SatelliteId, std::vector<int>> assign_tasks(std::span<const SatelliteId> orbit_sats, int num_classes,
                                                     std::span<const double> compute_fraction) {
    std::map<SatelliteId, std::vector<int>> tasks;
    if (orbit_sats.empty()) return tasks;
    std::vector<std::size_t> order(orbit_sats.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (static_cast<std::size_t>(num_classes) <= orbit_sats.size()) {
        auto fraction = [&](std::size_t k) { return k < compute_fraction.size() ? compute_fraction[k] : 1.0; };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (fraction(a) != fraction(b)) return fraction(a) > fraction(b);
            return orbit_sats[a] < orbit_sats[b];
        });
        for (int c = 0; c < num_classes; ++c) tasks[orbit_sats[order[static_cast<std::size_t>(c)]]].push_back(c);
    } else {
        for (int c = 0; c < num_classes; ++c) tasks[orbit_sats[static_cast<std::size_t>(c) % orbit_sats.size()]].push_back(c);
    }
    return tasks;
}

ModelParams aggregate(std::span<const Contribution> models) {
    if (models.empty()) throw DomainError("aggregate: no models");
    std::vector<const Contribution*> unique;
    for (const auto& c : models) {
        const bool seen = std::any_of(unique.begin(), unique.end(),
                                      [&](const Contribution* u) { return u->origin == c.origin; });
        if (!seen) unique.push_back(&c);
    }
    std::stable_sort(unique.begin(), unique.end(),
                     [](const Contribution* a, const Contribution* b) { return a->origin < b->origin; });
    double total = 0.0;
    for (const auto* c : unique) {
        if (!c->model.compatible(unique.front()->model)) throw ShapeMismatch("aggregate: model shapes differ");
        if (c->weight < 0.0) throw DomainError("aggregate: negative weight");
        total += c->weight;
    }
    if (!(total > 0.0)) throw DomainError("aggregate: zero total weight");
    ModelParams out = unique.front()->model;
    out.weights.setZero();
    for (const auto* c : unique) out.weights += (c->weight / total) * c->model.weights;
    return out;
}

Eigen::VectorXi predict(const ModelParams& model, const Eigen::MatrixXd& features) {
    const Eigen::MatrixXd scores = class_scores(model.weights, features);
    Eigen::VectorXi out(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best;
        scores.row(i).maxCoeff(&best);
        out(i) = static_cast<int>(best);
    }
    return out;
}

Metrics evaluate(const ModelParams& model, const Dataset& test) {
    if (test.size() == 0) throw DomainError("evaluate: empty test set");
    const int num_classes = model.num_classes();
    Metrics m;
    m.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
    const Eigen::VectorXi predicted = predict(model, test.features);
    for (long i = 0; i < test.size(); ++i) ++m.confusion(test.labels[static_cast<std::size_t>(i)], predicted(i));

    m.accuracy = static_cast<double>(m.confusion.trace()) / static_cast<double>(test.size());
    m.precision = Eigen::VectorXd::Zero(num_classes);
    m.recall = Eigen::VectorXd::Zero(num_classes);
    m.f1 = Eigen::VectorXd::Zero(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        const double hit = m.confusion(c, c);
        const double predicted_c = m.confusion.col(c).sum();
        const double actual_c = m.confusion.row(c).sum();
        m.precision(c) = predicted_c > 0 ? hit / predicted_c : 0.0;
        m.recall(c) = actual_c > 0 ? hit / actual_c : 0.0;
        const double denom = m.precision(c) + m.recall(c);
        m.f1(c) = denom > 0 ? 2.0 * m.precision(c) * m.recall(c) / denom : 0.0;
    }
    return m;
}

double flops_estimate(long active_params, long samples, int epochs) {
    constexpr double kPasses = 2.0;
    return 2.0 * static_cast<double>(active_params) * static_cast<double>(samples) * epochs * kPasses;
}

bool check_local_convergence(const ModelParams& model, int row, const FilteredDataset& data, double tau) {
    const Eigen::VectorXd w = model.weights.row(row).transpose();
    return binary_loss(w, data.features, data.targets) < tau;
}

}  // namespace orbitfl
