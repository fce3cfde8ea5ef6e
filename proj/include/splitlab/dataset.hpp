#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "splitlab/objectives.hpp"
#include "splitlab/partition.hpp"
#include "splitlab/split_mlp.hpp"

namespace splitlab {

/// Labeled samples; features are rows.
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    int classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    Eigen::MatrixXd rows(std::span<const std::size_t> idx) const;
    std::vector<int> labels_of(std::span<const std::size_t> idx) const;
};

/// Balanced Gaussian blobs: class means are seeded points at distance
/// `separation` from the origin, samples add unit-variance noise.
struct BlobRecipe {
    std::size_t samples = 1000;
    std::size_t features = 2;
    int classes = 2;
    double separation = 2.0;
    std::uint64_t seed = 0;
};

Dataset make_blobs(const BlobRecipe& recipe);

/// Objective whose f_i is the mean loss over client i's samples. The
/// stochastic oracle walks an epoch schedule: step k of a round uses batch
/// (k mod nb) of the permutation for epoch floor(k / nb), where the permutation
/// is seeded by (seed, round, client, epoch). Every batch is a uniformly random
/// subset of its size, so the mini-batch gradient is unbiased.
class SampleObjective : public Objective {
public:
    SampleObjective(std::shared_ptr<const Dataset> train, Partition partition, std::size_t batch_size,
                    std::shared_ptr<const Dataset> test);

    std::size_t num_clients() const override { return partition_.num_clients(); }
    std::vector<std::size_t> sample_counts() const override;
    std::size_t batches_per_epoch(std::size_t client) const override;
    std::optional<double> accuracy(const ParamVec& x) const override;

    std::vector<std::size_t> batch_indices(std::size_t client, const StreamKey& key) const;

    const Dataset& train() const noexcept { return *train_; }
    const Partition& partition() const noexcept { return partition_; }
    std::size_t batch_size() const noexcept { return batch_size_; }

protected:
    /// Mean loss over the given training rows; writes the gradient when non-null.
    virtual double batch_loss(const ParamVec& x, std::span<const std::size_t> idx, ParamVec* grad) const = 0;
    virtual std::vector<int> predict(const ParamVec& x, const Eigen::MatrixXd& features) const = 0;

    double do_local_loss(std::size_t client, const ParamVec& x) const override;
    ParamVec do_local_grad(std::size_t client, const ParamVec& x) const override;
    ParamVec do_stochastic_grad(std::size_t client, const ParamVec& x, const StreamKey& key) const override;

private:
    std::shared_ptr<const Dataset> train_;
    std::shared_ptr<const Dataset> test_;
    Partition partition_;
    std::size_t batch_size_;
};

/// Binary logistic regression with an l2 term; labels must be 0/1 and a bias
/// feature, if wanted, is part of the features.
class LogisticFamily final : public SampleObjective {
public:
    LogisticFamily(std::shared_ptr<const Dataset> train, Partition partition, double regularization,
                   std::size_t batch_size, std::shared_ptr<const Dataset> test = nullptr);

    std::string_view family() const override { return "logistic"; }
    Eigen::Index dim() const override { return train().features.cols(); }
    ParamVec initial_point() const override { return ParamVec::Zero(dim()); }

protected:
    double batch_loss(const ParamVec& x, std::span<const std::size_t> idx, ParamVec* grad) const override;
    std::vector<int> predict(const ParamVec& x, const Eigen::MatrixXd& features) const override;

private:
    double regularization_;
};

/// The monolithic view of the split MLP as an objective over partitioned data.
class MlpObjective final : public SampleObjective {
public:
    MlpObjective(std::shared_ptr<const Dataset> train, Partition partition, MlpShape shape,
                 std::size_t batch_size, std::uint64_t init_seed,
                 std::shared_ptr<const Dataset> test = nullptr);

    std::string_view family() const override { return "mlp"; }
    Eigen::Index dim() const override { return static_cast<Eigen::Index>(shape_.total_size()); }
    ParamVec initial_point() const override { return initial_; }
    const MlpShape& shape() const noexcept { return shape_; }

protected:
    double batch_loss(const ParamVec& x, std::span<const std::size_t> idx, ParamVec* grad) const override;
    std::vector<int> predict(const ParamVec& x, const Eigen::MatrixXd& features) const override;

private:
    MlpShape shape_;
    ParamVec initial_;
};

}  // namespace splitlab
