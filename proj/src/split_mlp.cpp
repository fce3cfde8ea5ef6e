#include "splitlab/split_mlp.hpp"

#include <cmath>
#include <string>

namespace splitlab {

namespace {

using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& pre) {
    return a == Activation::tanh ? Eigen::MatrixXd(pre.array().tanh()) : pre;
}

Eigen::MatrixXd activation_slope(Activation a, const Eigen::MatrixXd& pre) {
    if (a == Activation::identity) return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    return (1.0 - pre.array().tanh().square()).matrix();
}

void check_batch(const MlpShape& shape, const BatchFeatures& x, std::span<const int> labels) {
    if (x.rows() == 0) throw UsageError("batch must be nonempty");
    if (static_cast<std::size_t>(x.cols()) != shape.inputs) throw UsageError("feature width does not match model inputs");
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw UsageError("batch has mismatched label count");
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= shape.classes) throw UsageError("label out of range");
    }
}

// Mean softmax cross-entropy over the rows of `logits` and its gradient.
double softmax_ce(const Eigen::MatrixXd& logits, std::span<const int> labels, Eigen::MatrixXd& dlogits) {
    const double batch = static_cast<double>(logits.rows());
    dlogits.resize(logits.rows(), logits.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(r).array() - m).exp().matrix();
        const double z = e.sum();
        loss += std::log(z) + m - logits(r, labels[static_cast<std::size_t>(r)]);
        dlogits.row(r) = e / z;
        dlogits(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    }
    dlogits /= batch;
    return loss / batch;
}

}  // namespace

double mlp_loss_grad(const MlpShape& s, const ParamVec& params, const BatchFeatures& x,
                     std::span<const int> labels, ParamVec* grad) {
    check_batch(s, x, labels);
    if (static_cast<std::size_t>(params.size()) != s.total_size()) throw UsageError("parameter size does not match MLP shape");
    const auto h = static_cast<Eigen::Index>(s.cut_width);
    const auto p = static_cast<Eigen::Index>(s.inputs);
    const auto c = static_cast<Eigen::Index>(s.classes);
    const double* base = params.data();
    MatMap w1(base, h, p);
    VecMap b1(base + h * p, h);
    MatMap w2(base + h * p + h, c, h);
    VecMap b2(base + h * p + h + c * h, c);

    const Eigen::MatrixXd pre = (x * w1.transpose()).rowwise() + b1.transpose();
    const Eigen::MatrixXd act = activate(s.activation, pre);
    const Eigen::MatrixXd logits = (act * w2.transpose()).rowwise() + b2.transpose();
    Eigen::MatrixXd dlogits;
    const double loss = softmax_ce(logits, labels, dlogits);
    if (grad == nullptr) return loss;

    grad->resize(params.size());
    double* g = grad->data();
    const Eigen::MatrixXd dact = dlogits * w2;
    const Eigen::MatrixXd dpre = dact.cwiseProduct(activation_slope(s.activation, pre));
    Eigen::Map<Eigen::MatrixXd>(g, h, p) = dpre.transpose() * x;
    Eigen::Map<Eigen::VectorXd>(g + h * p, h) = dpre.colwise().sum().transpose();
    Eigen::Map<Eigen::MatrixXd>(g + h * p + h, c, h) = dlogits.transpose() * act;
    Eigen::Map<Eigen::VectorXd>(g + h * p + h + c * h, c) = dlogits.colwise().sum().transpose();
    return loss;
}

std::vector<int> mlp_predict(const MlpShape& s, const ParamVec& params, const BatchFeatures& x) {
    const auto h = static_cast<Eigen::Index>(s.cut_width);
    const auto p = static_cast<Eigen::Index>(s.inputs);
    const auto c = static_cast<Eigen::Index>(s.classes);
    const double* base = params.data();
    MatMap w1(base, h, p);
    VecMap b1(base + h * p, h);
    MatMap w2(base + h * p + h, c, h);
    VecMap b2(base + h * p + h + c * h, c);
    const Eigen::MatrixXd pre = (x * w1.transpose()).rowwise() + b1.transpose();
    const Eigen::MatrixXd logits = (activate(s.activation, pre) * w2.transpose()).rowwise() + b2.transpose();
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index arg = 0;
        logits.row(r).maxCoeff(&arg);
        out[static_cast<std::size_t>(r)] = static_cast<int>(arg);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Split protocol

SplitClient::SplitClient(const MlpShape& shape, const ParamVec& params) : shape_(shape), params_(params) {
    if (static_cast<std::size_t>(params.size()) != shape.client_size()) {
        throw UsageError("client parameter size does not match MLP shape");
    }
}

ActivationMessage SplitClient::forward(const BatchFeatures& features) {
    const auto h = static_cast<Eigen::Index>(shape_.cut_width);
    const auto p = static_cast<Eigen::Index>(shape_.inputs);
    MatMap w1(params_.data(), h, p);
    VecMap b1(params_.data() + h * p, h);
    features_ = features;
    pre_ = (features * w1.transpose()).rowwise() + b1.transpose();
    return {shape_.cut_width, activate(shape_.activation, pre_)};
}

ParamVec SplitClient::backward(const CutGradientMessage& message) const {
    if (message.cut_width != shape_.cut_width || message.values.cols() != pre_.cols() ||
        message.values.rows() != pre_.rows()) {
        throw ProtocolError("cut gradient has shape " + std::to_string(message.values.rows()) + "x" +
                            std::to_string(message.values.cols()) + ", client expects " +
                            std::to_string(pre_.rows()) + "x" + std::to_string(shape_.cut_width));
    }
    const auto h = static_cast<Eigen::Index>(shape_.cut_width);
    const auto p = static_cast<Eigen::Index>(shape_.inputs);
    ParamVec grad(params_.size());
    const Eigen::MatrixXd dpre = message.values.cwiseProduct(activation_slope(shape_.activation, pre_));
    Eigen::Map<Eigen::MatrixXd>(grad.data(), h, p) = dpre.transpose() * features_;
    Eigen::Map<Eigen::VectorXd>(grad.data() + h * p, h) = dpre.colwise().sum().transpose();
    return grad;
}

SplitServer::SplitServer(const MlpShape& shape, const ParamVec& params) : shape_(shape), params_(params) {
    if (static_cast<std::size_t>(params.size()) != shape.server_size()) {
        throw UsageError("server parameter size does not match MLP shape");
    }
}

ServerResult SplitServer::forward_backward(const ActivationMessage& message, std::span<const int> labels) const {
    if (message.cut_width != shape_.cut_width ||
        static_cast<std::size_t>(message.values.cols()) != shape_.cut_width) {
        throw ProtocolError("activation width " + std::to_string(message.values.cols()) +
                            " does not match server cut width " + std::to_string(shape_.cut_width));
    }
    if (static_cast<std::size_t>(message.values.rows()) != labels.size() || labels.empty()) {
        throw ProtocolError("activation batch does not match label count");
    }
    const auto h = static_cast<Eigen::Index>(shape_.cut_width);
    const auto c = static_cast<Eigen::Index>(shape_.classes);
    MatMap w2(params_.data(), c, h);
    VecMap b2(params_.data() + c * h, c);

    const Eigen::MatrixXd& act = message.values;
    const Eigen::MatrixXd logits = (act * w2.transpose()).rowwise() + b2.transpose();
    Eigen::MatrixXd dlogits;
    ServerResult out;
    out.loss = softmax_ce(logits, labels, dlogits);
    out.server_grad.resize(params_.size());
    Eigen::Map<Eigen::MatrixXd>(out.server_grad.data(), c, h) = dlogits.transpose() * act;
    Eigen::Map<Eigen::VectorXd>(out.server_grad.data() + c * h, c) = dlogits.colwise().sum().transpose();
    out.cut_grad = {shape_.cut_width, dlogits * w2};
    return out;
}

SplitMlp SplitMlp::from_full(const MlpShape& shape, const ParamVec& full) {
    if (static_cast<std::size_t>(full.size()) != shape.total_size()) throw UsageError("parameter size does not match MLP shape");
    const auto nc = static_cast<Eigen::Index>(shape.client_size());
    const auto ns = static_cast<Eigen::Index>(shape.server_size());
    return {shape, full.head(nc), full.tail(ns)};
}

ParamVec SplitMlp::full() const {
    ParamVec x(client_params.size() + server_params.size());
    x << client_params, server_params;
    return x;
}

SplitStep split_forward_backward(const SplitMlp& model, const BatchFeatures& features, std::span<const int> labels) {
    check_batch(model.shape, features, labels);
    SplitClient client(model.shape, model.client_params);
    SplitServer server(model.shape, model.server_params);

    ActivationMessage up = client.forward(features);        // client -> server
    ServerResult down = server.forward_backward(up, labels);  // server -> client
    SplitStep step;
    step.loss = down.loss;
    step.client_grad = client.backward(down.cut_grad);
    step.server_grad = std::move(down.server_grad);
    step.activations = std::move(up.values);
    return step;
}

}  // namespace splitlab
