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

#include "fixtures.hpp"
#include "qhamrec/hybrid.hpp"
#include "qhamrec/noise.hpp"

#include <gtest/gtest.h>

using namespace qhamrec;
using namespace qhamrec::hybrid;
using qhamrec::fixtures::small_world;

namespace {

const fixtures::World &world() {
    static const auto w = small_world();
    return w;
}

HybridModel fresh_model(std::uint64_t seed = 3) {
    const auto &w = world();
    return make_hybrid(w.encoder, w.archetypes.patterns, w.archetypes.patterns.size(), seed);
}

HybridConfig quick(int epochs) {
    HybridConfig c;
    c.epochs = epochs;
    c.batch_size = 16;
    c.target_seed = 9;
    return c;
}

double sample_loss(const HybridModel &m, const std::vector<double> &lat, std::size_t target, int label) {
    const auto z = qham::qham_forward(lat, target, m.neuron, qham::BackendConfig{});
    const Vector p = head_probabilities(m, z);
    double s = 0;
    for (Eigen::Index c = 0; c < p.size(); ++c) {
        const double y = c == label ? 1.0 : 0.0;
        s += (p(c) - y) * (p(c) - y);
    }
    return s / static_cast<double>(p.size());
}

} // namespace

TEST(HybridForward, ZeroHeadIsUniform) {
    auto m = fresh_model();
    m.head.weights.setZero();
    m.head.bias.setZero();
    const auto &split = world().splits.test;
    for (std::size_t r = 0; r < 5; ++r) {
        const Vector p = forward(m, split.values.row(static_cast<Eigen::Index>(r)).transpose(), r % m.n(),
                                 qham::BackendConfig{});
        for (Eigen::Index c = 0; c < p.size(); ++c) {
            EXPECT_NEAR(p(c), 1.0 / static_cast<double>(m.k()), 1e-15);
        }
    }
}

TEST(HybridForward, OutputsLieOnTheSimplex) {
    const auto m = fresh_model();
    const auto &split = world().splits.test;
    for (std::size_t r = 0; r < split.users(); ++r) {
        const Vector p = forward(m, split.values.row(static_cast<Eigen::Index>(r)).transpose(), r % m.n(),
                                 qham::BackendConfig{});
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_GE(p.minCoeff(), 0.0);
    }
}

TEST(HybridForward, WrongInputWidthIsConfigurationError) {
    const auto m = fresh_model();
    EXPECT_THROW(forward(m, Vector::Zero(7), 0, qham::BackendConfig{}), ConfigurationError);
}

TEST(HybridModelTest, LatentWidthMustMatchPatternLength) {
    const auto &w = world();
    auto enc = fixtures::block_encoder(static_cast<Eigen::Index>(w.matrix.movies()), 5);
    EXPECT_THROW(make_hybrid(enc, w.archetypes.patterns, 4, 1), ConfigurationError);
}

TEST(HybridGradients, MatchFiniteDifferences) {
    const auto m = fresh_model();
    Rng rng(4);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)}); };
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> lat(m.n());
        for (auto &v : lat) {
            v = u(rng);
        }
        const std::size_t target = static_cast<std::size_t>(t) % m.n();
        const int label = t % static_cast<int>(m.k());
        const auto g = detail::sample_gradient(m, lat, target, label, qham::BackendConfig{}, nullptr, true);
        EXPECT_NEAR(g.loss, sample_loss(m, lat, target, label), 1e-15);
        const double h = 1e-3;
        auto fd = [&](auto &&set) {
            auto f = [&](double delta) {
                auto q = m;
                set(q, delta);
                return sample_loss(q, lat, target, label);
            };
            return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
        };
        for (Eigen::Index r = 0; r < m.head.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.head.weights.cols(); ++c) {
                worst = std::max(worst, rel(g.head_w(r, c), fd([&](HybridModel &q, double d) { q.head.weights(r, c) += d; })));
            }
            worst = std::max(worst, rel(g.head_b(r), fd([&](HybridModel &q, double d) { q.head.bias(r) += d; })));
        }
        const auto ti = static_cast<Eigen::Index>(target);
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m.n()); ++j) {
            if (j != ti) {
                worst = std::max(worst, rel(g.alpha_row(j), fd([&](HybridModel &q, double d) { q.neuron.alpha(ti, j) += d; })));
            }
        }
        worst = std::max(worst, rel(g.b, fd([&](HybridModel &q, double d) { q.neuron.b(ti) += d; })));
        for (std::size_t j = 0; j < m.n(); ++j) {
            auto f = [&](double delta) {
                auto l = lat;
                l[j] += delta;
                return sample_loss(m, l, target, label);
            };
            const double num = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
            worst = std::max(worst, rel(g.d_latent(static_cast<Eigen::Index>(j)), num));
        }
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(HybridTraining, ZeroEpochsRecordsOnlyTheInitialModel) {
    const auto &w = world();
    const auto m = fresh_model();
    auto [trained, hist] = train_hybrid(m, w.splits, w.labels, quick(0));
    ASSERT_EQ(hist.epochs.size(), 1u);
    EXPECT_EQ(hist.epochs[0].epoch, 0);
    EXPECT_EQ(trained.head.weights, m.head.weights);
    EXPECT_EQ(trained.neuron.alpha, m.neuron.alpha);
}

TEST(HybridTraining, LossFallsAndDiagonalStaysZero) {
    const auto &w = world();
    auto [trained, hist] = train_hybrid(fresh_model(), w.splits, w.labels, quick(5));
    ASSERT_EQ(hist.epochs.size(), 6u);
    EXPECT_LT(hist.epochs.back().loss, hist.epochs.front().loss);
    EXPECT_GT(hist.epochs.back().accuracy, 0.8);
    EXPECT_EQ(trained.neuron.alpha.diagonal(), Vector::Zero(4));
}

TEST(HybridTraining, FrozenQuantumLayerKeepsHebbianAngles) {
    const auto &w = world();
    auto m = fresh_model();
    m.neuron.trainable = false;
    auto [trained, hist] = train_hybrid(m, w.splits, w.labels, quick(2));
    EXPECT_EQ(trained.neuron.alpha, m.neuron.alpha);
    EXPECT_EQ(trained.neuron.b, m.neuron.b);
    EXPECT_NE(trained.head.weights, m.head.weights);
    EXPECT_EQ(trained.encoder.layer1.weights, m.encoder.layer1.weights);
}

TEST(HybridTraining, FineTuningMovesTheEncoder) {
    const auto &w = world();
    auto cfg = quick(1);
    cfg.fine_tune_encoder = true;
    const auto m = fresh_model();
    auto [trained, hist] = train_hybrid(m, w.splits, w.labels, cfg);
    EXPECT_NE(trained.encoder.layer2.weights, m.encoder.layer2.weights);
    EXPECT_TRUE(trained.fine_tune_encoder);
}

TEST(HybridTraining, SeededRunsAreByteIdentical) {
    const auto &w = world();
    const auto labels = labels_for(w.splits.test, w.labels);
    std::string dumps[2];
    for (auto &d : dumps) {
        auto [trained, hist] = train_hybrid(fresh_model(), w.splits, w.labels, quick(2));
        d = to_json(evaluate(trained, w.splits.test, labels, qham::BackendConfig{}, 9)).dump() +
            history_csv(hist) + model_to_json(trained, 3, 9).dump();
    }
    EXPECT_EQ(dumps[0], dumps[1]);
}

TEST(HybridTraining, NonFiniteInitialModelIsTrainingError) {
    const auto &w = world();
    auto m = fresh_model();
    m.head.weights(0, 0) = std::nan("");
    EXPECT_THROW(train_hybrid(m, w.splits, w.labels, quick(1)), TrainingError);
}

TEST(HybridTraining, DivergenceCarriesLastGoodModel) {
    const auto &w = world();
    auto cfg = quick(3);
    cfg.adam.lr = std::numeric_limits<double>::infinity();
    const auto m = fresh_model();
    try {
        train_hybrid(m, w.splits, w.labels, cfg);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError &e) {
        EXPECT_EQ(e.epoch(), 1);
        EXPECT_EQ(e.last_good().head.weights, m.head.weights);
    }
}

TEST(HybridEvaluation, SingleClassSplitReportsUndefinedAuc) {
    const auto &w = world();
    const auto m = fresh_model();
    std::vector<int> labels(w.splits.test.users(), 0);
    const auto r = evaluate(m, w.splits.test, labels, qham::BackendConfig{}, 1);
    EXPECT_TRUE(std::isnan(r.roc_auc));
    const auto j = to_json(r);
    EXPECT_TRUE(j.at("roc_auc").is_null());
    EXPECT_TRUE(std::isnan(metrics_from_json(j).roc_auc));
}

TEST(HybridEvaluation, NoisyBackendIsPairedWithIdeal) {
    const auto &w = world();
    auto [trained, hist] = train_hybrid(fresh_model(), w.splits, w.labels, quick(3));
    const auto labels = labels_for(w.splits.test, w.labels);
    qham::BackendConfig noisy;
    noisy.kind = qham::Backend::noisy;
    noisy.noise = noise::sample_noise_spec(qham::circuit_length(4), 4, 1);
    const auto ideal = evaluate(trained, w.splits.test, labels, qham::BackendConfig{}, 9);
    const auto nz = evaluate(trained, w.splits.test, labels, noisy, 9);
    EXPECT_EQ(ideal.environment, "ideal");
    EXPECT_EQ(nz.environment, "noisy");
    EXPECT_EQ(ideal.samples, nz.samples);
    EXPECT_GT(nz.mse, ideal.mse);
}

TEST(HybridExport, MetricsAndModelRoundTrip) {
    const auto &w = world();
    auto [trained, hist] = train_hybrid(fresh_model(), w.splits, w.labels, quick(1));
    const auto labels = labels_for(w.splits.test, w.labels);
    const auto r = evaluate(trained, w.splits.test, labels, qham::BackendConfig{}, 9);
    const auto back = metrics_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back.mse, r.mse);
    EXPECT_EQ(back.roc_auc, r.roc_auc);
    EXPECT_EQ(back.confusion, r.confusion);
    EXPECT_EQ(metrics_csv_header(), "environment,mse,accuracy,f1,roc_auc\n");
    EXPECT_EQ(metrics_csv_row(back), metrics_csv_row(r));

    const auto restored = model_from_json(nlohmann::json::parse(model_to_json(trained, 3, 9).dump()), trained.encoder);
    const auto r2 = evaluate(restored, w.splits.test, labels, qham::BackendConfig{}, 9);
    EXPECT_EQ(to_json(r2).dump(), to_json(r).dump());
    EXPECT_EQ(history_csv(hist).substr(0, 31), "epoch,loss,accuracy,f1,roc_auc\n");
}
