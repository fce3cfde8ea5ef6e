#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "splitlab/types.hpp"

namespace splitlab {

enum class Activation { tanh, identity };

/// Two-layer classifier cut after the hidden nonlinearity.
///
///   client:  A = act(W1 X + b1)          W1: cut_width x inputs, b1: cut_width
///   server:  z = W2 A + b2, softmax CE   W2: classes x cut_width, b2: classes
///
/// Parameters are flattened column-major, client block first, so the full
/// model vector is [client; server].
struct MlpShape {
    std::size_t inputs = 1;
    std::size_t cut_width = 1;
    std::size_t classes = 2;
    Activation activation = Activation::tanh;

    std::size_t client_size() const noexcept { return cut_width * inputs + cut_width; }
    std::size_t server_size() const noexcept { return classes * cut_width + classes; }
    std::size_t total_size() const noexcept { return client_size() + server_size(); }
};

/// Batch features are rows of `features` (batch x inputs).
using BatchFeatures = Eigen::MatrixXd;

/// Monolithic forward/backward over the whole parameter vector. Returns the
/// mean cross-entropy and writes d(loss)/d(params) into *grad when non-null.
double mlp_loss_grad(const MlpShape& shape, const ParamVec& params, const BatchFeatures& features,
                     std::span<const int> labels, ParamVec* grad);

/// Class predictions for each row of `features`.
std::vector<int> mlp_predict(const MlpShape& shape, const ParamVec& params, const BatchFeatures& features);

/// Client -> server: cut-layer activations for one batch.
struct ActivationMessage {
    std::size_t cut_width = 0;
    Eigen::MatrixXd values;  // batch x cut_width
};

/// Server -> client: gradient of the batch loss with respect to the activations.
struct CutGradientMessage {
    std::size_t cut_width = 0;
    Eigen::MatrixXd values;  // batch x cut_width
};

/// Client half of the model. Keeps the pre-activations of the last forward
/// pass so that backward can finish the chain rule.
class SplitClient {
public:
    SplitClient(const MlpShape& shape, const ParamVec& params);

    ActivationMessage forward(const BatchFeatures& features);
    ParamVec backward(const CutGradientMessage& message) const;

private:
    MlpShape shape_;
    const ParamVec& params_;
    BatchFeatures features_;
    Eigen::MatrixXd pre_;
};

struct ServerResult {
    double loss = 0.0;
    ParamVec server_grad;
    CutGradientMessage cut_grad;
};

class SplitServer {
public:
    SplitServer(const MlpShape& shape, const ParamVec& params);

    /// Forward to the loss and back to the cut layer. Throws ProtocolError when
    /// the message width or batch size does not match.
    ServerResult forward_backward(const ActivationMessage& message, std::span<const int> labels) const;

private:
    MlpShape shape_;
    const ParamVec& params_;
};

/// Split model state: x = [client_params; server_params].
struct SplitMlp {
    MlpShape shape;
    ParamVec client_params;
    ParamVec server_params;

    static SplitMlp from_full(const MlpShape& shape, const ParamVec& full);
    ParamVec full() const;
};

struct SplitStep {
    double loss = 0.0;
    ParamVec client_grad;
    ParamVec server_grad;
    Eigen::MatrixXd activations;
};

/// The four-message exchange for one batch: client forward, server forward,
/// server backward, client backward.
SplitStep split_forward_backward(const SplitMlp& model, const BatchFeatures& features,
                                 std::span<const int> labels);

}  // namespace splitlab
