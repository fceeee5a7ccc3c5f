// Copyright 2026 The qhamrec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Small dense network engine: layers, batched forward/backward passes,
 * the Adam optimizer, and the rating autoencoder built on top of them.
 *
 * Batches are matrices with one sample per row.
 */
#pragma once

#include "common.hpp"
#include "dataset.hpp"
#include "io.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qhamrec::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { identity, tanh, softmax };

inline std::string to_string(Activation a) {
    switch (a) {
    case Activation::identity:
        return "identity";
    case Activation::tanh:
        return "tanh";
    case Activation::softmax:
        return "softmax";
    }
    return "?";
}

inline Activation activation_from_string(const std::string &s) {
    if (s == "identity") {
        return Activation::identity;
    }
    if (s == "tanh") {
        return Activation::tanh;
    }
    if (s == "softmax") {
        return Activation::softmax;
    }
    throw ArgumentError("unknown activation '" + s + "'");
}

struct DenseLayer {
    Matrix weights; // out x in
    Vector bias;    // out
    Activation activation = Activation::identity;

    [[nodiscard]] Eigen::Index in_dim() const { return weights.cols(); }
    [[nodiscard]] Eigen::Index out_dim() const { return weights.rows(); }

    static DenseLayer zeros(Eigen::Index in, Eigen::Index out, Activation act) {
        return {Matrix::Zero(out, in), Vector::Zero(out), act};
    }

    /// Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
    static DenseLayer uniform_fan_in(Eigen::Index in, Eigen::Index out, Activation act,
                                     Rng &rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer layer = zeros(in, out, act);
        for (Eigen::Index i = 0; i < out; ++i) {
            for (Eigen::Index j = 0; j < in; ++j) {
                layer.weights(i, j) = dist(rng);
            }
        }
        for (Eigen::Index i = 0; i < out; ++i) {
            layer.bias(i) = dist(rng);
        }
        return layer;
    }
};

/// Applies the activation row-wise (softmax normalizes each row).
inline Matrix activate(Activation act, Matrix pre) {
    switch (act) {
    case Activation::identity:
        return pre;
    case Activation::tanh:
        return pre.array().tanh().matrix();
    case Activation::softmax:
        for (Eigen::Index r = 0; r < pre.rows(); ++r) {
            const double mx = pre.row(r).maxCoeff();
            pre.row(r) = (pre.row(r).array() - mx).exp().matrix();
            pre.row(r) /= pre.row(r).sum();
        }
        return pre;
    }
    return pre;
}

inline Matrix dense_forward_batch(const DenseLayer &layer, const Matrix &input) {
    if (input.cols() != layer.in_dim()) {
        throw ArgumentError("dense_forward: input has " + std::to_string(input.cols()) +
                            " features, layer expects " +
                            std::to_string(layer.in_dim()));
    }
    Matrix pre = input * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    return activate(layer.activation, std::move(pre));
}

inline Vector dense_forward(const DenseLayer &layer, const Vector &input) {
    if (input.size() != layer.in_dim()) {
        throw ArgumentError("dense_forward: input length " + std::to_string(input.size()) +
                            " != layer in-dimension " + std::to_string(layer.in_dim()));
    }
    Matrix row = input.transpose();
    return dense_forward_batch(layer, row).row(0).transpose();
}

inline double mse_loss(const Vector &pred, const Vector &target) {
    if (pred.size() != target.size()) {
        throw ArgumentError("mse_loss: length mismatch");
    }
    if (pred.size() == 0) {
        return 0.0;
    }
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

struct LossAndGrad {
    double loss = 0.0;
    Matrix grad; // d loss / d pred
};

/**
 * Mean squared error over a batch. Without a mask this is the mean over all
 * entries. With a mask (1 = counted) it is the mean over counted entries.
 */
inline LossAndGrad mse_with_grad(const Matrix &pred, const Matrix &target,
                                 const Matrix *mask = nullptr) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ArgumentError("mse: shape mismatch");
    }
    Matrix diff = pred - target;
    double count = static_cast<double>(diff.size());
    if (mask != nullptr) {
        diff.array() *= mask->array();
        count = mask->sum();
    }
    LossAndGrad out;
    if (count <= 0.0) {
        out.grad = Matrix::Zero(pred.rows(), pred.cols());
        return out;
    }
    out.loss = diff.squaredNorm() / count;
    out.grad = (2.0 / count) * diff;
    return out;
}

struct Network {
    std::vector<DenseLayer> layers;

    [[nodiscard]] Matrix forward(const Matrix &input) const {
        Matrix x = input;
        for (const auto &layer : layers) {
            x = dense_forward_batch(layer, x);
        }
        return x;
    }
    [[nodiscard]] Vector forward(const Vector &input) const {
        Matrix row = input.transpose();
        return forward(row).row(0).transpose();
    }
    [[nodiscard]] std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto &l : layers) {
            n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
        }
        return n;
    }
};

/// outputs[0] is the input batch, outputs[l+1] the output of layer l.
struct ForwardTrace {
    std::vector<Matrix> outputs;
};

inline ForwardTrace forward_trace(const Network &net, const Matrix &input) {
    ForwardTrace trace;
    trace.outputs.reserve(net.layers.size() + 1);
    trace.outputs.push_back(input);
    for (const auto &layer : net.layers) {
        trace.outputs.push_back(dense_forward_batch(layer, trace.outputs.back()));
    }
    return trace;
}

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> bias;

    static Gradients zeros_like(const Network &net) {
        Gradients g;
        for (const auto &l : net.layers) {
            g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
            g.bias.push_back(Vector::Zero(l.bias.size()));
        }
        return g;
    }
};

/**
 * @brief Backpropagates `upstream` (d loss / d network output, one row per
 * sample) through the network.
 *
 * @param d_input when non-null receives d loss / d input.
 */
inline Gradients backward(const Network &net, const ForwardTrace &trace,
                          const Matrix &upstream, Matrix *d_input = nullptr) {
    Gradients g;
    const std::size_t L = net.layers.size();
    g.weights.resize(L);
    g.bias.resize(L);
    Matrix delta = upstream;
    for (std::size_t li = L; li-- > 0;) {
        const auto &layer = net.layers[li];
        const Matrix &out = trace.outputs[li + 1];
        switch (layer.activation) {
        case Activation::identity:
            break;
        case Activation::tanh:
            delta.array() *= (1.0 - out.array().square());
            break;
        case Activation::softmax:
            for (Eigen::Index r = 0; r < delta.rows(); ++r) {
                const double dot = delta.row(r).dot(out.row(r));
                delta.row(r) = (out.row(r).array() * (delta.row(r).array() - dot)).matrix();
            }
            break;
        }
        g.weights[li] = delta.transpose() * trace.outputs[li];
        g.bias[li] = delta.colwise().sum().transpose();
        if (li > 0 || d_input != nullptr) {
            delta = delta * layer.weights;
        }
    }
    if (d_input != nullptr) {
        *d_input = std::move(delta);
    }
    return g;
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam moments for one flat parameter block.
class AdamBlock {
  public:
    explicit AdamBlock(std::size_t size = 0) : m_(size, 0.0), v_(size, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads,
              const AdamConfig &cfg, std::uint64_t t) {
        if (params.size() != m_.size() || grads.size() != m_.size()) {
            throw ArgumentError("adam: block size mismatch");
        }
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * grads[i];
            v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }

  private:
    std::vector<double> m_;
    std::vector<double> v_;
};

class Adam {
  public:
    Adam() = default;
    Adam(const Network &net, AdamConfig cfg) : cfg_(cfg) {
        for (const auto &l : net.layers) {
            weights_.emplace_back(static_cast<std::size_t>(l.weights.size()));
            bias_.emplace_back(static_cast<std::size_t>(l.bias.size()));
        }
    }

    void step(Network &net, const Gradients &g) {
        ++t_;
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            auto &l = net.layers[li];
            weights_[li].step({l.weights.data(), static_cast<std::size_t>(l.weights.size())},
                              {g.weights[li].data(),
                               static_cast<std::size_t>(g.weights[li].size())},
                              cfg_, t_);
            bias_[li].step({l.bias.data(), static_cast<std::size_t>(l.bias.size())},
                           {g.bias[li].data(), static_cast<std::size_t>(g.bias[li].size())},
                           cfg_, t_);
        }
    }

    [[nodiscard]] const AdamConfig &config() const { return cfg_; }
    [[nodiscard]] std::uint64_t steps() const { return t_; }

  private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<AdamBlock> weights_;
    std::vector<AdamBlock> bias_;
};

inline void check_finite(const Gradients &g) {
    for (std::size_t li = 0; li < g.weights.size(); ++li) {
        const auto bad_w = (!g.weights[li].array().isFinite()).count();
        const auto bad_b = (!g.bias[li].array().isFinite()).count();
        if (bad_w + bad_b > 0) {
            std::ostringstream msg;
            msg << "non-finite gradient in layer " << li << ": " << bad_w
                << " weight entries, " << bad_b << " bias entries";
            throw NumericError(msg.str());
        }
    }
}

/**
 * One optimizer step on the mean batch MSE. Returns the loss measured before
 * the step.
 */
inline double backward_and_step(Network &net, const Matrix &batch, const Matrix &targets,
                                Adam &opt, const Matrix *mask = nullptr) {
    auto trace = forward_trace(net, batch);
    auto lg = mse_with_grad(trace.outputs.back(), targets, mask);
    auto g = backward(net, trace, lg.grad);
    check_finite(g);
    opt.step(net, g);
    return lg.loss;
}

// ---------------------------------------------------------------------------
// Autoencoder

/// M -> ceil(M/100) (identity) -> n (tanh)
struct EncoderParams {
    DenseLayer layer1;
    DenseLayer layer2;

    [[nodiscard]] Eigen::Index input_dim() const { return layer1.in_dim(); }
    [[nodiscard]] Eigen::Index latent_dim() const { return layer2.out_dim(); }
    [[nodiscard]] Network network() const { return Network{{layer1, layer2}}; }
};

/// Encoder plus its mirror n -> ceil(M/100) (tanh) -> M (identity).
struct AutoencoderParams {
    Network net;

    [[nodiscard]] EncoderParams encoder() const { return {net.layers.at(0), net.layers.at(1)}; }
};

inline Eigen::Index hidden_width(Eigen::Index movies) { return (movies + 99) / 100; }

inline AutoencoderParams make_autoencoder(Eigen::Index movies, Eigen::Index latent, Rng &rng) {
    if (movies < 1 || latent < 1) {
        throw ArgumentError("autoencoder dimensions must be positive");
    }
    const auto hidden = hidden_width(movies);
    AutoencoderParams p;
    p.net.layers.push_back(DenseLayer::uniform_fan_in(movies, hidden, Activation::identity, rng));
    p.net.layers.push_back(DenseLayer::uniform_fan_in(hidden, latent, Activation::tanh, rng));
    p.net.layers.push_back(DenseLayer::uniform_fan_in(latent, hidden, Activation::tanh, rng));
    p.net.layers.push_back(DenseLayer::uniform_fan_in(hidden, movies, Activation::identity, rng));
    return p;
}

inline Vector encode(const EncoderParams &params, const Vector &user_vector) {
    if (user_vector.size() != params.input_dim()) {
        throw ArgumentError("encode: vector length " + std::to_string(user_vector.size()) +
                            " != " + std::to_string(params.input_dim()));
    }
    return dense_forward(params.layer2, dense_forward(params.layer1, user_vector));
}

/// Encodes every row; returns one latent per row.
inline Matrix encode_rows(const EncoderParams &params, const dataset::RowMatrix &rows) {
    if (rows.cols() != params.input_dim()) {
        throw ArgumentError("encode: matrix has " + std::to_string(rows.cols()) +
                            " columns, encoder expects " + std::to_string(params.input_dim()));
    }
    Matrix out(rows.rows(), params.latent_dim());
    constexpr Eigen::Index chunk = 512;
    for (Eigen::Index r = 0; r < rows.rows(); r += chunk) {
        const auto len = std::min(chunk, rows.rows() - r);
        Matrix x = rows.middleRows(r, len);
        out.middleRows(r, len) =
            dense_forward_batch(params.layer2, dense_forward_batch(params.layer1, x));
    }
    return out;
}

struct AutoencoderConfig {
    Eigen::Index latent = 8;
    int epochs = 35;
    Eigen::Index batch_size = 64;
    AdamConfig adam{};
    std::uint64_t seed = 0;
    bool mask_unrated = false;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    double test_loss = 0.0;
};

inline Matrix unrated_mask(const Matrix &x) { return (x.array() != 0.0).cast<double>().matrix(); }

/// Reconstruction MSE over all rows (masked to rated entries if requested).
inline double reconstruction_mse(const Network &net, const dataset::RowMatrix &rows,
                                 bool mask_unrated) {
    double sum = 0.0;
    double count = 0.0;
    constexpr Eigen::Index chunk = 512;
    for (Eigen::Index r = 0; r < rows.rows(); r += chunk) {
        const auto len = std::min(chunk, rows.rows() - r);
        Matrix x = rows.middleRows(r, len);
        Matrix diff = net.forward(x) - x;
        if (mask_unrated) {
            Matrix m = unrated_mask(x);
            diff.array() *= m.array();
            count += m.sum();
        } else {
            count += static_cast<double>(diff.size());
        }
        sum += diff.squaredNorm();
    }
    return count > 0.0 ? sum / count : 0.0;
}

/**
 * @brief Trains the autoencoder on `splits.train`, tracking validation MSE
 * each epoch and reporting test MSE at the end.
 *
 * History entry 0 holds the losses of the initial parameters.
 */
inline std::pair<AutoencoderParams, TrainHistory>
train_autoencoder(const dataset::SplitSet &splits, const AutoencoderConfig &cfg) {
    const auto &train = splits.train.values;
    if (train.rows() == 0) {
        throw ArgumentError("train split is empty");
    }
    if (cfg.batch_size < 1 || cfg.epochs < 0) {
        throw ArgumentError("invalid autoencoder config");
    }
    Rng init_rng(mix_seed(cfg.seed, 0));
    Rng shuffle_rng(mix_seed(cfg.seed, 1));
    auto params = make_autoencoder(train.cols(), cfg.latent, init_rng);
    Adam opt(params.net, cfg.adam);

    auto val_mse = [&] {
        return splits.validation.values.rows() > 0
                   ? reconstruction_mse(params.net, splits.validation.values, cfg.mask_unrated)
                   : 0.0;
    };

    TrainHistory history;
    history.epochs.push_back(
        {0, reconstruction_mse(params.net, train, cfg.mask_unrated), val_mse()});

    std::vector<Eigen::Index> order(static_cast<std::size_t>(train.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto len = std::min(static_cast<std::size_t>(cfg.batch_size),
                                      order.size() - start);
            Matrix x(static_cast<Eigen::Index>(len), train.cols());
            for (std::size_t i = 0; i < len; ++i) {
                x.row(static_cast<Eigen::Index>(i)) = train.row(order[start + i]);
            }
            double loss = 0.0;
            if (cfg.mask_unrated) {
                Matrix m = unrated_mask(x);
                loss = backward_and_step(params.net, x, x, opt, &m);
            } else {
                loss = backward_and_step(params.net, x, x, opt);
            }
            if (!std::isfinite(loss)) {
                throw TrainingError("autoencoder diverged at epoch " + std::to_string(epoch));
            }
            weighted += loss * static_cast<double>(len);
        }
        const double v = val_mse();
        if (!std::isfinite(v)) {
            throw TrainingError("autoencoder validation loss non-finite at epoch " +
                                std::to_string(epoch));
        }
        history.epochs.push_back({epoch, weighted / static_cast<double>(order.size()), v});
    }
    history.test_loss = splits.test.values.rows() > 0
                            ? reconstruction_mse(params.net, splits.test.values, cfg.mask_unrated)
                            : 0.0;
    return {std::move(params), std::move(history)};
}

// ---------------------------------------------------------------------------
// Checkpoints

inline nlohmann::json layer_to_json(const DenseLayer &l) {
    std::vector<double> w(static_cast<std::size_t>(l.weights.size()));
    // row-major flattening
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.weights.cols(); ++j) {
            w[static_cast<std::size_t>(i * l.weights.cols() + j)] = l.weights(i, j);
        }
    }
    return {{"in", l.in_dim()},
            {"out", l.out_dim()},
            {"activation", to_string(l.activation)},
            {"weights", w},
            {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}};
}

inline DenseLayer layer_from_json(const nlohmann::json &j) {
    const auto in = j.at("in").get<Eigen::Index>();
    const auto out = j.at("out").get<Eigen::Index>();
    auto w = j.at("weights").get<std::vector<double>>();
    auto b = j.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != in * out ||
        static_cast<Eigen::Index>(b.size()) != out) {
        throw IoError("layer checkpoint shape mismatch");
    }
    DenseLayer l = DenseLayer::zeros(in, out, activation_from_string(j.at("activation")));
    for (Eigen::Index i = 0; i < out; ++i) {
        for (Eigen::Index k = 0; k < in; ++k) {
            l.weights(i, k) = w[static_cast<std::size_t>(i * in + k)];
        }
        l.bias(i) = b[static_cast<std::size_t>(i)];
    }
    return l;
}

inline nlohmann::json network_to_json(const Network &net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto &l : net.layers) {
        layers.push_back(layer_to_json(l));
    }
    return {{"format", "qhamrec-network"}, {"version", 1}, {"layers", layers}};
}

inline Network network_from_json(const nlohmann::json &j) {
    if (j.value("format", "") != "qhamrec-network" || j.value("version", 0) != 1) {
        throw IoError("not a qhamrec network checkpoint");
    }
    Network net;
    for (const auto &l : j.at("layers")) {
        net.layers.push_back(layer_from_json(l));
    }
    for (std::size_t i = 1; i < net.layers.size(); ++i) {
        if (net.layers[i].in_dim() != net.layers[i - 1].out_dim()) {
            throw IoError("network checkpoint has inconsistent layer shapes");
        }
    }
    return net;
}

inline std::string history_csv(const TrainHistory &h) {
    std::string out = "epoch,train_loss,val_loss\n";
    for (const auto &e : h.epochs) {
        out += std::to_string(e.epoch) + "," + io::fmt_double(e.train_loss) + "," +
               io::fmt_double(e.val_loss) + "\n";
    }
    return out;
}

} // namespace qhamrec::nn
