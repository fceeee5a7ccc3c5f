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
 * The hybrid classifier: encoder -> QHAM single-neuron update -> dense
 * softmax head, trained with MSE against one-hot archetype labels.
 */
#pragma once

#include "archetypes.hpp"
#include "dataset.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "nn.hpp"
#include "qham.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qhamrec::hybrid {

using nn::Matrix;
using nn::Vector;

struct HybridModel {
    nn::EncoderParams encoder;
    bool fine_tune_encoder = false;
    archetypes::PatternSet patterns;
    qham::HebbianConfig hebbian;
    qham::NeuronParams neuron;
    nn::DenseLayer head; // n -> k, softmax

    [[nodiscard]] std::size_t n() const { return neuron.n(); }
    [[nodiscard]] std::size_t k() const { return static_cast<std::size_t>(head.out_dim()); }

    void check_dims() const {
        const auto n_latent = static_cast<std::size_t>(encoder.latent_dim());
        if (n_latent != neuron.n() || n_latent != patterns.n ||
            static_cast<std::size_t>(head.in_dim()) != n_latent || head.out_dim() < 1) {
            throw ConfigurationError("hybrid model dimensions disagree: encoder latent " +
                                     std::to_string(n_latent) + ", neurons " +
                                     std::to_string(neuron.n()) + ", head input " +
                                     std::to_string(head.in_dim()));
        }
    }
};

/// Hebbian-initialized QHAM over `patterns` and a fan-in uniform head.
inline HybridModel make_hybrid(const nn::EncoderParams &encoder,
                               const archetypes::PatternSet &patterns, std::size_t k,
                               std::uint64_t init_seed) {
    HybridModel m;
    m.encoder = encoder;
    m.patterns = patterns;
    m.hebbian = qham::hebbian_config(qham::hebbian_weights(patterns));
    m.neuron = qham::NeuronParams::from_hebbian(m.hebbian);
    Rng rng(mix_seed(init_seed, 2));
    m.head = nn::DenseLayer::uniform_fan_in(static_cast<Eigen::Index>(patterns.n),
                                            static_cast<Eigen::Index>(k), nn::Activation::softmax,
                                            rng);
    m.check_dims();
    return m;
}

/// QHAM expectations of an already-encoded latent pushed through the head.
inline Vector head_probabilities(const HybridModel &model, const std::vector<double> &z) {
    Vector zv = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
    return nn::dense_forward(model.head, zv);
}

inline Vector forward(const HybridModel &model, const Vector &user_vector, std::size_t target,
                      const qham::BackendConfig &backend, Rng *shot_rng = nullptr) {
    model.check_dims();
    if (user_vector.size() != model.encoder.input_dim()) {
        throw ConfigurationError("user vector has " + std::to_string(user_vector.size()) +
                                 " entries, encoder expects " +
                                 std::to_string(model.encoder.input_dim()));
    }
    const Vector latent = nn::encode(model.encoder, user_vector);
    const std::vector<double> lat(latent.data(), latent.data() + latent.size());
    return head_probabilities(model, qham::qham_forward(lat, target, model.neuron, backend, shot_rng));
}

// ---------------------------------------------------------------------------
// Target streams and labels

constexpr std::uint64_t kTrainSalt = 11;
constexpr std::uint64_t kValidationSalt = 12;
constexpr std::uint64_t kTestSalt = 13;
constexpr std::uint64_t kShotSalt = 21;

/// Fixed evaluation targets: one draw per row from the split's own stream.
inline std::vector<std::size_t> evaluation_targets(std::size_t rows, std::size_t n,
                                                   std::uint64_t target_seed, std::uint64_t salt) {
    Rng rng(mix_seed(target_seed, salt));
    std::vector<std::size_t> t(rows);
    for (auto &v : t) {
        v = qham::pick_target(rng, n);
    }
    return t;
}

/// Labels for the rows of `m`, looked up by user id.
inline std::vector<int> labels_for(const dataset::RatingsMatrix &m,
                                   const std::map<std::int64_t, int> &label_of_user) {
    std::vector<int> out(m.users());
    for (std::size_t r = 0; r < m.users(); ++r) {
        auto it = label_of_user.find(m.user_ids[r]);
        if (it == label_of_user.end()) {
            throw ConfigurationError("no archetype label for user " + std::to_string(m.user_ids[r]));
        }
        out[r] = it->second;
    }
    return out;
}

inline std::map<std::int64_t, int> label_map(const dataset::RatingsMatrix &m,
                                             const std::vector<int> &labels) {
    if (labels.size() != m.users()) {
        throw ArgumentError("label count != user count");
    }
    std::map<std::int64_t, int> out;
    for (std::size_t r = 0; r < m.users(); ++r) {
        out[m.user_ids[r]] = labels[r];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct MetricsReport {
    double mse = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0; // NaN when fewer than two classes are present
    std::string environment = "ideal";
    metrics::Confusion confusion;
    std::vector<int> absent_classes;
    std::vector<double> f1_per_class;
    std::vector<double> roc_auc_per_class;
    std::size_t samples = 0;
};

struct Predictions {
    std::vector<std::vector<double>> probabilities;
    std::vector<int> predicted;
};

inline Predictions predict(const HybridModel &model, const dataset::RatingsMatrix &split,
                           const std::vector<std::size_t> &targets,
                           const qham::BackendConfig &backend, Rng *shot_rng = nullptr) {
    model.check_dims();
    if (targets.size() != split.users()) {
        throw ArgumentError("predict: one target per row required");
    }
    Predictions p;
    const Matrix latent = nn::encode_rows(model.encoder, split.values);
    std::vector<double> lat(model.n());
    for (std::size_t r = 0; r < split.users(); ++r) {
        for (std::size_t i = 0; i < model.n(); ++i) {
            lat[i] = latent(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
        }
        const Vector probs = head_probabilities(
            model, qham::qham_forward(lat, targets[r], model.neuron, backend, shot_rng));
        p.probabilities.emplace_back(probs.data(), probs.data() + probs.size());
        p.predicted.push_back(metrics::argmax(p.probabilities.back()));
    }
    return p;
}

inline MetricsReport score(const Predictions &p, const std::vector<int> &labels, std::size_t k,
                           const std::string &environment) {
    if (labels.empty()) {
        throw ArgumentError("cannot score an empty split");
    }
    MetricsReport r;
    r.environment = environment;
    r.samples = labels.size();
    r.confusion = metrics::confusion(labels, p.predicted, k);
    r.accuracy = metrics::accuracy(r.confusion);
    const auto f1 = metrics::macro_f1(r.confusion);
    r.f1 = f1.macro;
    r.f1_per_class = f1.per_class;
    r.absent_classes = f1.absent_classes;
    double se = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            const double y = labels[i] == static_cast<int>(c) ? 1.0 : 0.0;
            se += (p.probabilities[i][c] - y) * (p.probabilities[i][c] - y);
        }
    }
    r.mse = se / static_cast<double>(labels.size() * k);
    const auto present = k - r.absent_classes.size();
    if (present >= 2) {
        const auto auc = metrics::roc_auc_ovr(p.probabilities, labels, k);
        r.roc_auc = auc.macro;
        r.roc_auc_per_class = auc.per_class;
    } else {
        r.roc_auc = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

inline MetricsReport evaluate(const HybridModel &model, const dataset::RatingsMatrix &split,
                              const std::vector<int> &labels, const qham::BackendConfig &backend,
                              std::uint64_t target_seed, std::uint64_t salt = kTestSalt) {
    const auto targets = evaluation_targets(split.users(), model.n(), target_seed, salt);
    Rng shot_rng(mix_seed(target_seed, kShotSalt + salt));
    const auto p = predict(model, split, targets, backend, &shot_rng);
    return score(p, labels, model.k(), qham::to_string(backend.kind));
}

// ---------------------------------------------------------------------------
// Training

struct HybridConfig {
    int epochs = 35;
    std::size_t batch_size = 64;
    nn::AdamConfig adam{1e-2, 0.9, 0.999, 1e-8};
    nn::AdamConfig encoder_adam{};
    bool fine_tune_encoder = false;
    std::uint64_t target_seed = 0;
    qham::BackendConfig backend{};
};

struct HistoryRow {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0;
};

struct HybridHistory {
    std::vector<HistoryRow> epochs;
};

class DivergenceError : public TrainingError {
  public:
    DivergenceError(const std::string &what, HybridModel last_good, int epoch)
        : TrainingError(what), last_good_(std::move(last_good)), epoch_(epoch) {}
    [[nodiscard]] const HybridModel &last_good() const { return last_good_; }
    [[nodiscard]] int epoch() const { return epoch_; }

  private:
    HybridModel last_good_;
    int epoch_;
};

namespace detail {

struct SampleGrad {
    double loss = 0.0;
    Matrix head_w;
    Vector head_b;
    Vector alpha_row;
    double b = 0.0;
    Vector d_latent;
};

// MSE between softmax output and one-hot target, back to the QHAM outputs.
inline SampleGrad sample_gradient(const HybridModel &model, const std::vector<double> &latent,
                                  std::size_t target, int label,
                                  const qham::BackendConfig &backend, Rng *shot_rng,
                                  bool want_latent) {
    const std::size_t k = model.k();
    const auto z = qham::qham_forward(latent, target, model.neuron, backend, shot_rng);
    const Vector zv = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
    const Vector p = nn::dense_forward(model.head, zv);
    Vector y = Vector::Zero(static_cast<Eigen::Index>(k));
    y(label) = 1.0;
    SampleGrad g;
    const Vector diff = p - y;
    g.loss = diff.squaredNorm() / static_cast<double>(k);
    const Vector d_p = 2.0 * diff / static_cast<double>(k);
    // softmax Jacobian: d_logit = p * (d_p - <d_p, p>)
    const Vector d_logit = p.cwiseProduct((d_p.array() - d_p.dot(p)).matrix());
    g.head_w = d_logit * zv.transpose();
    g.head_b = d_logit;
    const Vector d_z = model.head.weights.transpose() * d_logit;
    if (model.neuron.trainable || want_latent) {
        const std::vector<double> up(d_z.data(), d_z.data() + d_z.size());
        auto qg = qham::parameter_gradients(model.neuron, latent, target, up, want_latent);
        g.alpha_row = std::move(qg.alpha_row);
        g.b = qg.b;
        g.d_latent = std::move(qg.input);
    }
    return g;
}

inline std::vector<double> row_vector(const Matrix &m, Eigen::Index r) {
    std::vector<double> v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        v[static_cast<std::size_t>(c)] = m(r, c);
    }
    return v;
}

inline double mean_loss(const HybridModel &model, const dataset::RatingsMatrix &split,
                        const std::vector<int> &labels, const std::vector<std::size_t> &targets,
                        const qham::BackendConfig &backend) {
    const Matrix latent = nn::encode_rows(model.encoder, split.values);
    double sum = 0.0;
    for (std::size_t r = 0; r < split.users(); ++r) {
        const auto lat = row_vector(latent, static_cast<Eigen::Index>(r));
        const auto z = qham::qham_forward(lat, targets[r], model.neuron, backend);
        const Vector p = head_probabilities(model, z);
        Vector y = Vector::Zero(p.size());
        y(labels[r]) = 1.0;
        sum += (p - y).squaredNorm() / static_cast<double>(model.k());
    }
    return split.users() == 0 ? 0.0 : sum / static_cast<double>(split.users());
}

} // namespace detail

/**
 * @brief Trains head and QHAM parameters (and the encoder when fine-tuning
 * is enabled) with Adam on the mean per-batch MSE.
 *
 * The forward pass uses the configured backend; QHAM gradients always come
 * from the noise-free circuit. Each sample draws a fresh target qubit per
 * epoch. History row 0 describes the initial model. The validation split is
 * only watched for divergence.
 */
inline std::pair<HybridModel, HybridHistory>
train_hybrid(HybridModel model, const dataset::SplitSet &splits,
             const std::map<std::int64_t, int> &label_of_user, const HybridConfig &cfg) {
    model.check_dims();
    if (cfg.epochs < 0 || cfg.batch_size < 1) {
        throw ArgumentError("invalid hybrid training config");
    }
    const auto &train = splits.train;
    if (train.users() == 0) {
        throw ArgumentError("train split is empty");
    }
    model.fine_tune_encoder = cfg.fine_tune_encoder;
    const std::size_t n = model.n();
    const auto train_labels = labels_for(train, label_of_user);
    const auto val_labels = labels_for(splits.validation, label_of_user);

    Rng target_rng(mix_seed(cfg.target_seed, kTrainSalt));
    Rng shuffle_rng(mix_seed(cfg.target_seed, kTrainSalt + 100));
    Rng shot_rng(mix_seed(cfg.target_seed, kShotSalt));

    nn::AdamBlock head_w_opt(static_cast<std::size_t>(model.head.weights.size()));
    nn::AdamBlock head_b_opt(static_cast<std::size_t>(model.head.bias.size()));
    nn::AdamBlock alpha_opt(n * n);
    nn::AdamBlock b_opt(n);
    nn::Network enc_net = model.encoder.network();
    nn::Adam enc_opt(enc_net, cfg.encoder_adam);
    std::uint64_t step = 0;

    HybridHistory history;
    auto record = [&](int epoch, double loss) {
        HistoryRow row{epoch, loss, 0.0, 0.0, 0.0};
        if (splits.validation.users() > 0) {
            MetricsReport rep;
            try {
                rep = evaluate(model, splits.validation, val_labels, cfg.backend,
                               cfg.target_seed, kValidationSalt);
            } catch (const NumericError &) {
                return false;
            }
            row.accuracy = rep.accuracy;
            row.f1 = rep.f1;
            row.roc_auc = rep.roc_auc;
            if (!std::isfinite(rep.mse)) {
                return false;
            }
        }
        history.epochs.push_back(row);
        return std::isfinite(loss);
    };

    const auto init_targets = evaluation_targets(train.users(), n, cfg.target_seed, kTrainSalt);
    if (!record(0, detail::mean_loss(model, train, train_labels, init_targets, cfg.backend))) {
        throw TrainingError("initial hybrid model produces non-finite outputs");
    }
    HybridModel last_good = model;

    std::vector<std::size_t> order(train.users());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Matrix latent = nn::encode_rows(model.encoder, train.values);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            Matrix gw = Matrix::Zero(model.head.weights.rows(), model.head.weights.cols());
            Vector gb = Vector::Zero(model.head.bias.size());
            Matrix galpha = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            Vector gbias = Vector::Zero(static_cast<Eigen::Index>(n));
            Matrix d_latent = Matrix::Zero(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(n));
            double batch_loss = 0.0;
            const double scale = 1.0 / static_cast<double>(len);
            // ordered reduction over the batch keeps updates deterministic
            for (std::size_t s = 0; s < len; ++s) {
                const std::size_t r = order[start + s];
                const std::size_t target = qham::pick_target(target_rng, n);
                const auto lat = detail::row_vector(latent, static_cast<Eigen::Index>(r));
                detail::SampleGrad g;
                try {
                    g = detail::sample_gradient(model, lat, target, train_labels[r], cfg.backend,
                                                &shot_rng, cfg.fine_tune_encoder);
                } catch (const NumericError &e) {
                    throw DivergenceError("hybrid training diverged at epoch " +
                                              std::to_string(epoch) + ": " + e.what(),
                                          last_good, epoch);
                }
                batch_loss += g.loss * scale;
                gw += g.head_w * scale;
                gb += g.head_b * scale;
                if (model.neuron.trainable) {
                    galpha.row(static_cast<Eigen::Index>(target)) += g.alpha_row.transpose() * scale;
                    gbias(static_cast<Eigen::Index>(target)) += g.b * scale;
                }
                if (cfg.fine_tune_encoder) {
                    d_latent.row(static_cast<Eigen::Index>(s)) = g.d_latent.transpose() * scale;
                }
            }
            if (!std::isfinite(batch_loss) || !gw.allFinite() || !gb.allFinite() ||
                !galpha.allFinite() || !gbias.allFinite()) {
                throw DivergenceError("hybrid training diverged at epoch " + std::to_string(epoch),
                                      last_good, epoch);
            }
            ++step;
            head_w_opt.step({model.head.weights.data(), static_cast<std::size_t>(gw.size())},
                            {gw.data(), static_cast<std::size_t>(gw.size())}, cfg.adam, step);
            head_b_opt.step({model.head.bias.data(), static_cast<std::size_t>(gb.size())},
                            {gb.data(), static_cast<std::size_t>(gb.size())}, cfg.adam, step);
            if (model.neuron.trainable) {
                alpha_opt.step({model.neuron.alpha.data(), n * n}, {galpha.data(), n * n},
                               cfg.adam, step);
                model.neuron.alpha.diagonal().setZero();
                b_opt.step({model.neuron.b.data(), n}, {gbias.data(), n}, cfg.adam, step);
            }
            if (cfg.fine_tune_encoder) {
                Matrix x(static_cast<Eigen::Index>(len), train.values.cols());
                for (std::size_t s = 0; s < len; ++s) {
                    x.row(static_cast<Eigen::Index>(s)) = train.values.row(static_cast<Eigen::Index>(order[start + s]));
                }
                auto trace = nn::forward_trace(enc_net, x);
                auto eg = nn::backward(enc_net, trace, d_latent);
                nn::check_finite(eg);
                enc_opt.step(enc_net, eg);
                model.encoder.layer1 = enc_net.layers[0];
                model.encoder.layer2 = enc_net.layers[1];
            }
            weighted += batch_loss * static_cast<double>(len);
        }
        const bool ok = record(epoch, weighted / static_cast<double>(order.size())) &&
                        model.head.weights.allFinite() && model.neuron.alpha.allFinite() &&
                        model.neuron.b.allFinite();
        if (!ok) {
            throw DivergenceError("hybrid training diverged at epoch " + std::to_string(epoch),
                                  last_good, epoch);
        }
        last_good = model;
    }
    return {std::move(model), std::move(history)};
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json nan_to_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const MetricsReport &r) {
    nlohmann::json auc_per_class = nlohmann::json::array();
    for (double v : r.roc_auc_per_class) {
        auc_per_class.push_back(nan_to_null(v));
    }
    return {{"format", "qhamrec-metrics"},
            {"version", 1},
            {"environment", r.environment},
            {"mse", r.mse},
            {"accuracy", r.accuracy},
            {"f1", r.f1},
            {"roc_auc", nan_to_null(r.roc_auc)},
            {"samples", r.samples},
            {"confusion", r.confusion},
            {"absent_classes", r.absent_classes},
            {"f1_per_class", r.f1_per_class},
            {"roc_auc_per_class", auc_per_class}};
}

inline MetricsReport metrics_from_json(const nlohmann::json &j) {
    if (j.value("format", "") != "qhamrec-metrics") {
        throw IoError("not a qhamrec metrics report");
    }
    MetricsReport r;
    r.environment = j.at("environment").get<std::string>();
    r.mse = j.at("mse").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.roc_auc = j.at("roc_auc").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                          : j.at("roc_auc").get<double>();
    r.samples = j.at("samples").get<std::size_t>();
    r.confusion = j.at("confusion").get<metrics::Confusion>();
    r.absent_classes = j.at("absent_classes").get<std::vector<int>>();
    r.f1_per_class = j.at("f1_per_class").get<std::vector<double>>();
    return r;
}

inline std::string metrics_csv_header() { return "environment,mse,accuracy,f1,roc_auc\n"; }

inline std::string metrics_csv_row(const MetricsReport &r) {
    return r.environment + "," + io::fmt_double(r.mse) + "," + io::fmt_double(r.accuracy) + "," +
           io::fmt_double(r.f1) + "," + io::fmt_double(r.roc_auc) + "\n";
}

inline std::string history_csv(const HybridHistory &h) {
    std::string out = "epoch,loss,accuracy,f1,roc_auc\n";
    for (const auto &e : h.epochs) {
        out += std::to_string(e.epoch) + "," + io::fmt_double(e.loss) + "," +
               io::fmt_double(e.accuracy) + "," + io::fmt_double(e.f1) + "," +
               io::fmt_double(e.roc_auc) + "\n";
    }
    return out;
}

inline nlohmann::json model_to_json(const HybridModel &m, std::uint64_t init_seed,
                                    std::uint64_t target_seed) {
    nlohmann::json patterns = nlohmann::json::array();
    for (const auto &p : m.patterns.patterns) {
        patterns.push_back(p.bits);
    }
    nlohmann::json j = {{"format", "qhamrec-hybrid"},
                        {"version", 1},
                        {"n", m.n()},
                        {"k", m.k()},
                        {"patterns", patterns},
                        {"hebbian", qham::to_json(m.hebbian)},
                        {"neuron", qham::to_json(m.neuron)},
                        {"head", nn::layer_to_json(m.head)},
                        {"fine_tune_encoder", m.fine_tune_encoder},
                        {"seeds", {{"init", init_seed}, {"target", target_seed}}}};
    if (m.fine_tune_encoder) {
        j["encoder"] = nn::network_to_json(m.encoder.network());
    }
    return j;
}

/// The frozen encoder comes from the autoencoder artifact unless the
/// checkpoint carries a fine-tuned copy.
inline HybridModel model_from_json(const nlohmann::json &j, const nn::EncoderParams &encoder) {
    if (j.value("format", "") != "qhamrec-hybrid") {
        throw IoError("not a qhamrec hybrid checkpoint");
    }
    HybridModel m;
    m.fine_tune_encoder = j.at("fine_tune_encoder").get<bool>();
    if (m.fine_tune_encoder) {
        auto net = nn::network_from_json(j.at("encoder"));
        m.encoder = {net.layers.at(0), net.layers.at(1)};
    } else {
        m.encoder = encoder;
    }
    m.patterns.n = j.at("n").get<std::size_t>();
    int idx = 0;
    for (const auto &p : j.at("patterns")) {
        m.patterns.patterns.push_back({p.get<archetypes::Pattern>(), idx++});
    }
    m.hebbian = qham::hebbian_from_json(j.at("hebbian"));
    m.neuron = qham::neuron_from_json(j.at("neuron"));
    m.head = nn::layer_from_json(j.at("head"));
    m.check_dims();
    return m;
}

} // namespace qhamrec::hybrid
