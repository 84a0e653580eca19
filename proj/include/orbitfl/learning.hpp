#pragma once

// Multinomial logistic regression with one-vs-all personalization: each row of
// the L x (d+1) weight matrix is a class score (last column is the bias). A
// satellite training in binary mode fits only its target row with a sigmoid
// loss; the orbital and global aggregates are weighted parameter averages.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "orbitfl/constellation.hpp"
#include "orbitfl/rng.hpp"

namespace orbitfl {

struct Sample {
    Eigen::VectorXd features;
    int label = 0;
};

struct Dataset {
    Eigen::MatrixXd features;  // n x d
    std::vector<int> labels;
    int num_classes = 0;

    long size() const { return static_cast<long>(labels.size()); }
    int dims() const { return static_cast<int>(features.cols()); }
    Sample sample(long i) const { return {features.row(i).transpose(), labels[static_cast<std::size_t>(i)]}; }
    std::vector<long> class_counts() const;
    Dataset subset(std::span<const long> indices) const;
};

/// Binary-labeled output of the filtering policy (targets are 0 or 1).
struct FilteredDataset {
    Eigen::MatrixXd features;
    Eigen::VectorXd targets;
    std::vector<int> source_labels;  // original class of each kept sample
    int target_class = 0;
    long positives = 0;

    long size() const { return features.rows(); }
};

struct FilterPolicy {
    int target_class = 0;
    // Non-target samples kept per positive; 0 keeps only the target class.
    double negative_ratio = 1.0;
    std::uint64_t seed = 0;
};

template <typename Scalar>
struct LinearModel {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weights;  // L x (d+1)
    int value_bits = 32;

    static LinearModel zeros(int num_classes, int dims, int value_bits = 32) {
        return {Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_classes, dims + 1), value_bits};
    }
    int num_classes() const { return static_cast<int>(weights.rows()); }
    int dims() const { return static_cast<int>(weights.cols()) - 1; }
    long num_params() const { return static_cast<long>(weights.size()); }
    double size_bits() const { return static_cast<double>(num_params()) * value_bits; }
    bool compatible(const LinearModel& other) const {
        return weights.rows() == other.weights.rows() && weights.cols() == other.weights.cols();
    }
};

using ModelParams = LinearModel<double>;

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 4;
    int epochs = 5;
    double loss_threshold = 0.1;
    int value_bits = 32;
};

struct FlopMeter {
    double flops = 0.0;
};

// --- loss and gradient kernels -------------------------------------------

template <typename Scalar>
Scalar sigmoid(Scalar z) {
    using std::exp;
    return z >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-z)) : exp(z) / (Scalar(1) + exp(z));
}

/// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
    using std::abs;
    using std::exp;
    using std::log1p;
    return (z > Scalar(0) ? z : Scalar(0)) + log1p(exp(-abs(z)));
}

/// Mean sigmoid cross-entropy of one weight row over (X, t) with the bias in
/// the last entry of `row`.
template <typename RowDerived, typename XDerived, typename TDerived>
typename RowDerived::Scalar binary_loss(const Eigen::MatrixBase<RowDerived>& row, const Eigen::MatrixBase<XDerived>& x,
                                        const Eigen::MatrixBase<TDerived>& t) {
    using Scalar = typename RowDerived::Scalar;
    const Eigen::Index d = x.cols();
    Scalar total(0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Scalar z = x.row(i).dot(row.head(d)) + row(d);
        total += softplus(z) - t(i) * z;
    }
    return total / Scalar(x.rows());
}

/// Gradient of binary_loss with respect to `row`.
template <typename RowDerived, typename XDerived, typename TDerived>
Eigen::Matrix<typename RowDerived::Scalar, Eigen::Dynamic, 1> binary_gradient(
    const Eigen::MatrixBase<RowDerived>& row, const Eigen::MatrixBase<XDerived>& x,
    const Eigen::MatrixBase<TDerived>& t) {
    using Scalar = typename RowDerived::Scalar;
    const Eigen::Index d = x.cols();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(d + 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Scalar residual = sigmoid(x.row(i).dot(row.head(d)) + row(d)) - t(i);
        grad.head(d) += residual * x.row(i).transpose();
        grad(d) += residual;
    }
    return grad / Scalar(x.rows());
}

/// Class scores W [x; 1] for every row of X (n x L).
template <typename WDerived, typename XDerived>
Eigen::Matrix<typename WDerived::Scalar, Eigen::Dynamic, Eigen::Dynamic> class_scores(
    const Eigen::MatrixBase<WDerived>& w, const Eigen::MatrixBase<XDerived>& x) {
    const Eigen::Index d = x.cols();
    return (x * w.leftCols(d).transpose()).rowwise() + w.col(d).transpose();
}

/// Mean softmax cross-entropy of W over (X, y).
template <typename WDerived, typename XDerived>
typename WDerived::Scalar softmax_loss(const Eigen::MatrixBase<WDerived>& w, const Eigen::MatrixBase<XDerived>& x,
                                       std::span<const int> labels) {
    using Scalar = typename WDerived::Scalar;
    using std::exp;
    using std::log;
    const auto scores = class_scores(w, x);
    Scalar total(0);
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const Scalar peak = scores.row(i).maxCoeff();
        const Scalar lse = peak + log((scores.row(i).array() - peak).exp().sum());
        total += lse - scores(i, labels[static_cast<std::size_t>(i)]);
    }
    return total / Scalar(scores.rows());
}

/// Gradient of softmax_loss with respect to W (L x (d+1)).
template <typename WDerived, typename XDerived>
Eigen::Matrix<typename WDerived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax_gradient(
    const Eigen::MatrixBase<WDerived>& w, const Eigen::MatrixBase<XDerived>& x, std::span<const int> labels) {
    using Scalar = typename WDerived::Scalar;
    const Eigen::Index d = x.cols();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> probs = class_scores(w, x);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const Scalar peak = probs.row(i).maxCoeff();
        probs.row(i) = (probs.row(i).array() - peak).exp();
        probs.row(i) /= probs.row(i).sum();
        probs(i, labels[static_cast<std::size_t>(i)]) -= Scalar(1);
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> grad(w.rows(), d + 1);
    grad.leftCols(d) = probs.transpose() * x;
    grad.col(d) = probs.colwise().sum().transpose();
    return grad / Scalar(x.rows());
}

// --- data ------------------------------------------------------------------

struct BlobSpec {
    int dims = 2;
    int num_classes = 10;
    int per_class = 360;
    // Class means sit on a circle of this radius (first two coordinates).
    double separation = 8.0;
    double spread = 1.0;
};

/// Seeded isotropic Gaussian blobs, samples ordered by class.
Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed);

/// Reads the `OFL1` binary layout: magic, u32 n, d, L (little endian),
/// n*d float32 row-major features, n u16 labels.
Dataset load_ofl(const std::string& path);
void save_ofl(const Dataset& data, const std::string& path);

enum class Partition { Dominant, Iid };

/// Sample indices per satellite (ordered like all_satellites). Under Dominant,
/// slot j holds `dominant_fraction` of its share of class (j mod L) and the
/// rest of every class is dealt round-robin to the other satellites.
std::vector<std::vector<long>> partition_dataset(const Dataset& data, const ConstellationConfig& cfg,
                                                 Partition partition, double dominant_fraction, std::uint64_t seed);

// --- operations --------------------------------------------------------------

/// Keeps every target-class sample (label 1) and floor(ratio * positives)
/// uniformly drawn non-target samples (label 0), in original order. Throws
/// DomainError when there is no target-class sample.
FilteredDataset filter(const Dataset& data, const FilterPolicy& policy);

/// J epochs of mini-batch SGD on `row` with the sigmoid loss; other rows untouched.
ModelParams train_binary(ModelParams model, int row, const FilteredDataset& data, const TrainConfig& tc, Rng& rng,
                         FlopMeter* meter = nullptr);

/// J epochs of mini-batch SGD on all rows with the softmax loss.
ModelParams train_multiclass(ModelParams model, const Dataset& data, const TrainConfig& tc, Rng& rng,
                             FlopMeter* meter = nullptr);

/// Classes per satellite. With L <= I, the L satellites with the largest
/// compute fraction (ties by id) get one class each; otherwise classes are
/// dealt round-robin over all satellites.
std::map<SatelliteId, std::vector<int>> assign_tasks(std::span<const SatelliteId> orbit_sats, int num_classes,
                                                     std::span<const double> compute_fraction = {});

struct Contribution {
    SatelliteId origin;
    ModelParams model;
    double weight = 1.0;
};

/// Weighted parameter average. Repeated origins are dropped (first copy kept)
/// and the reduction runs in origin order.
ModelParams aggregate(std::span<const Contribution> models);

struct Metrics {
    double accuracy = 0.0;
    Eigen::VectorXd precision;
    Eigen::VectorXd recall;
    Eigen::VectorXd f1;
    Eigen::MatrixXi confusion;  // rows: true class, cols: predicted

    double macro_precision() const { return precision.size() ? precision.mean() : 0.0; }
    double macro_recall() const { return recall.size() ? recall.mean() : 0.0; }
    double macro_f1() const { return f1.size() ? f1.mean() : 0.0; }
};

Eigen::VectorXi predict(const ModelParams& model, const Eigen::MatrixXd& features);

Metrics evaluate(const ModelParams& model, const Dataset& test);

/// Forward plus backward pass: 2 * params * samples * epochs * 2.
double flops_estimate(long active_params, long samples, int epochs);

/// Mean sigmoid loss of `row` over the filtered data is below tau.
bool check_local_convergence(const ModelParams& model, int row, const FilteredDataset& data, double tau);

}  // namespace orbitfl
