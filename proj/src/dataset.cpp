#include "splitlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace splitlab {

Eigen::MatrixXd Dataset::rows(std::span<const std::size_t> idx) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), features.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(idx[r]));
    return out;
}

std::vector<int> Dataset::labels_of(std::span<const std::size_t> idx) const {
    std::vector<int> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = labels[idx[r]];
    return out;
}

Dataset make_blobs(const BlobRecipe& r) {
    if (r.samples == 0 || r.features == 0 || r.classes < 2) {
        throw UsageError("blob recipe needs samples >= 1, features >= 1, classes >= 2");
    }
    Stream stream(r.seed, Purpose::generator);
    std::normal_distribution<double> normal;
    const auto p = static_cast<Eigen::Index>(r.features);

    Eigen::MatrixXd means(r.classes, p);
    for (int c = 0; c < r.classes; ++c) {
        for (Eigen::Index j = 0; j < p; ++j) means(c, j) = normal(stream);
        means.row(c) *= r.separation / means.row(c).norm();
    }
    Dataset d;
    d.classes = r.classes;
    d.features.resize(static_cast<Eigen::Index>(r.samples), p);
    d.labels.resize(r.samples);
    for (std::size_t i = 0; i < r.samples; ++i) {
        const int c = static_cast<int>(i % static_cast<std::size_t>(r.classes));
        d.labels[i] = c;
        for (Eigen::Index j = 0; j < p; ++j) d.features(static_cast<Eigen::Index>(i), j) = means(c, j) + normal(stream);
    }
    return d;
}

// ---------------------------------------------------------------------------

SampleObjective::SampleObjective(std::shared_ptr<const Dataset> train, Partition partition,
                                 std::size_t batch_size, std::shared_ptr<const Dataset> test)
    : train_(std::move(train)), test_(std::move(test)), partition_(std::move(partition)), batch_size_(batch_size) {
    if (!train_) throw UsageError("training dataset is required");
    if (batch_size_ == 0) throw UsageError("batch_size must be >= 1");
    validate_partition(partition_, train_->size());
}

std::vector<std::size_t> SampleObjective::sample_counts() const {
    std::vector<std::size_t> n;
    for (const auto& a : partition_.assignments) n.push_back(a.size());
    return n;
}

std::size_t SampleObjective::batches_per_epoch(std::size_t client) const {
    const std::size_t n = partition_.assignments.at(client).size();
    return (n + batch_size_ - 1) / batch_size_;
}

std::vector<std::size_t> SampleObjective::batch_indices(std::size_t client, const StreamKey& key) const {
    const auto& own = partition_.assignments.at(client);
    const std::size_t nb = batches_per_epoch(client);
    const std::size_t epoch = key.step / nb;
    const std::size_t batch = key.step % nb;

    std::vector<std::size_t> perm(own.size());
    std::iota(perm.begin(), perm.end(), 0);
    Stream stream(StreamKey{key.seed, key.round, static_cast<std::uint32_t>(client), static_cast<std::uint32_t>(epoch)},
                  Purpose::batch);
    std::shuffle(perm.begin(), perm.end(), stream);

    const std::size_t lo = batch * batch_size_;
    const std::size_t hi = std::min(lo + batch_size_, own.size());
    std::vector<std::size_t> out;
    out.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) out.push_back(own[perm[k]]);
    return out;
}

double SampleObjective::do_local_loss(std::size_t client, const ParamVec& x) const {
    return batch_loss(x, partition_.assignments[client], nullptr);
}

ParamVec SampleObjective::do_local_grad(std::size_t client, const ParamVec& x) const {
    ParamVec g;
    batch_loss(x, partition_.assignments[client], &g);
    return g;
}

ParamVec SampleObjective::do_stochastic_grad(std::size_t client, const ParamVec& x, const StreamKey& key) const {
    const auto idx = batch_indices(client, key);
    ParamVec g;
    batch_loss(x, idx, &g);
    return g;
}

std::optional<double> SampleObjective::accuracy(const ParamVec& x) const {
    if (!test_ || test_->size() == 0 || x.size() != dim() || !x.allFinite()) return std::nullopt;
    const auto pred = predict(x, test_->features);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == test_->labels[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------

LogisticFamily::LogisticFamily(std::shared_ptr<const Dataset> train, Partition partition, double regularization,
                               std::size_t batch_size, std::shared_ptr<const Dataset> test)
    : SampleObjective(std::move(train), std::move(partition), batch_size, std::move(test)),
      regularization_(regularization) {
    if (!(regularization_ >= 0.0)) throw UsageError("regularization must be >= 0");
    for (int y : this->train().labels) {
        if (y != 0 && y != 1) throw UsageError("logistic family needs binary 0/1 labels");
    }
}

double LogisticFamily::batch_loss(const ParamVec& x, std::span<const std::size_t> idx, ParamVec* grad) const {
    const auto& data = train();
    double loss = 0.0;
    if (grad) *grad = ParamVec::Zero(x.size());
    for (std::size_t i : idx) {
        const auto row = data.features.row(static_cast<Eigen::Index>(i));
        const double z = row.dot(x);
        const double y = data.labels[i];
        // log(1 + e^z) - y z, evaluated stably.
        loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y * z;
        if (grad) {
            const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            *grad += (sig - y) * row.transpose();
        }
    }
    const double n = static_cast<double>(idx.size());
    loss = loss / n + 0.5 * regularization_ * x.squaredNorm();
    if (grad) *grad = *grad / n + regularization_ * x;
    return loss;
}

std::vector<int> LogisticFamily::predict(const ParamVec& x, const Eigen::MatrixXd& features) const {
    const ParamVec z = features * x;
    std::vector<int> out(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = z[i] > 0 ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------

MlpObjective::MlpObjective(std::shared_ptr<const Dataset> train, Partition partition, MlpShape shape,
                           std::size_t batch_size, std::uint64_t init_seed, std::shared_ptr<const Dataset> test)
    : SampleObjective(std::move(train), std::move(partition), batch_size, std::move(test)), shape_(shape) {
    if (static_cast<std::size_t>(this->train().features.cols()) != shape_.inputs) {
        throw UsageError("MLP inputs do not match dataset feature width");
    }
    if (static_cast<std::size_t>(this->train().classes) > shape_.classes) {
        throw UsageError("MLP has fewer outputs than dataset classes");
    }
    // Glorot-style uniform init per layer; biases start at zero.
    Stream stream(init_seed, Purpose::init);
    initial_ = ParamVec::Zero(dim());
    const auto h = static_cast<Eigen::Index>(shape_.cut_width);
    const auto p = static_cast<Eigen::Index>(shape_.inputs);
    const auto c = static_cast<Eigen::Index>(shape_.classes);
    const double r1 = std::sqrt(6.0 / static_cast<double>(h + p));
    const double r2 = std::sqrt(6.0 / static_cast<double>(h + c));
    for (Eigen::Index k = 0; k < h * p; ++k) initial_[k] = r1 * (2.0 * stream.uniform() - 1.0);
    for (Eigen::Index k = 0; k < c * h; ++k) initial_[h * p + h + k] = r2 * (2.0 * stream.uniform() - 1.0);
}

double MlpObjective::batch_loss(const ParamVec& x, std::span<const std::size_t> idx, ParamVec* grad) const {
    const auto features = train().rows(idx);
    const auto labels = train().labels_of(idx);
    return mlp_loss_grad(shape_, x, features, labels, grad);
}

std::vector<int> MlpObjective::predict(const ParamVec& x, const Eigen::MatrixXd& features) const {
    return mlp_predict(shape_, x, features);
}

}  // namespace splitlab
