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

#include "qhamrec/qham.hpp"
#include "qhamrec/qsim_oracle.hpp"

#include <gtest/gtest.h>

using namespace qhamrec;
using namespace qhamrec::qham;

namespace {

archetypes::PatternSet make_patterns(std::vector<std::vector<int>> rows) {
    archetypes::PatternSet set;
    set.n = rows.front().size();
    int i = 0;
    for (auto &r : rows) {
        set.patterns.push_back({std::move(r), i++});
    }
    return set;
}

std::vector<int> polar_from_bits(unsigned bits, std::size_t n) {
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = ((bits >> i) & 1U) != 0 ? 1 : -1;
    }
    return v;
}

NeuronParams random_params(Rng &rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-kPi, kPi);
    NeuronParams p;
    p.alpha = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    p.b = Vector::Zero(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < p.alpha.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.alpha.cols(); ++j) {
            if (i != j) {
                p.alpha(i, j) = u(rng);
            }
        }
        p.b(i) = u(rng);
    }
    return p;
}

std::vector<double> random_latent(Rng &rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(n);
    for (auto &v : x) {
        v = u(rng);
    }
    return x;
}

double contract(const std::vector<double> &z, const std::vector<double> &up) {
    double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s += z[i] * up[i];
    }
    return s;
}

// Fourth-order central difference.
template <typename F> double central_diff(F f, double x) {
    const double h = 1e-3;
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)}); }

const BackendConfig kIdeal{};

} // namespace

TEST(HebbianWeights, SinglePatternHandValues) {
    const auto w = hebbian_weights(make_patterns({{1, -1}}));
    EXPECT_DOUBLE_EQ(w(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(w(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(w(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(w(1, 1), 1.0);
}

TEST(HebbianWeights, OpposingCorrelationsCancel) {
    const auto w = hebbian_weights(make_patterns({{1, 1}, {1, -1}}));
    EXPECT_DOUBLE_EQ(w(0, 1), 0.0);
}

TEST(HebbianWeights, MatchesDoubleLoopRecomputation) {
    Rng rng(21);
    std::uniform_int_distribution<unsigned> bits(0, 255);
    std::vector<std::vector<int>> rows;
    for (int m = 0; m < 4; ++m) {
        rows.push_back(polar_from_bits(bits(rng), 8));
    }
    const auto w = hebbian_weights(make_patterns(rows));
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            double s = 0;
            for (const auto &p : rows) {
                s += p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(j)];
            }
            EXPECT_EQ(w(i, j), s / 4.0);
        }
    }
    EXPECT_EQ(w, w.transpose());
    EXPECT_LE(w.cwiseAbs().maxCoeff(), 1.0);
}

TEST(HebbianWeights, EmptySetIsArgumentError) {
    archetypes::PatternSet empty;
    empty.n = 3;
    EXPECT_THROW(hebbian_weights(empty), ArgumentError);
}

TEST(HebbianConfigTest, GammaForTwoNeurons) {
    const auto cfg = hebbian_config(hebbian_weights(make_patterns({{1, -1}})));
    EXPECT_DOUBLE_EQ(cfg.w_max, 1.0);
    EXPECT_DOUBLE_EQ(cfg.gamma, kPi / 8);
}

TEST(HebbianConfigTest, ZeroOffDiagonalRowSumsGiveQuarterPiBias) {
    const auto cfg = hebbian_config(hebbian_weights(make_patterns({{1, 1}, {1, -1}})));
    for (Eigen::Index i = 0; i < 2; ++i) {
        EXPECT_DOUBLE_EQ(cfg.beta(i), kPi / 4);
    }
}

TEST(HebbianConfigTest, AllZeroMatrixIsConfigurationError) {
    EXPECT_THROW(hebbian_config(Matrix::Zero(3, 3)), ConfigurationError);
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.5;
    EXPECT_THROW(hebbian_config(asym), ArgumentError);
}

TEST(HebbianConfigTest, BiasConsistencyOverOffDiagonalField) {
    Rng rng(22);
    std::uniform_int_distribution<unsigned> bits(0, 63);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::vector<int>> rows;
        for (int m = 0; m < 3; ++m) {
            rows.push_back(polar_from_bits(bits(rng), 6));
        }
        const auto cfg = hebbian_config(hebbian_weights(make_patterns(rows)));
        for (Eigen::Index i = 0; i < 6; ++i) {
            const double field = cfg.W.row(i).sum() - cfg.W(i, i);
            EXPECT_NEAR(cfg.beta(i) + cfg.gamma * field, kPi / 4, 1e-15);
        }
    }
}

TEST(HebbianConfigTest, PhiStaysInsideHalfPiForEveryPolarInput) {
    Rng rng(23);
    for (std::size_t n = 2; n <= 8; ++n) {
        std::uniform_int_distribution<unsigned> bits(0, (1U << n) - 1);
        for (int t = 0; t < 5; ++t) {
            std::vector<std::vector<int>> rows;
            for (int m = 0; m < 1 + t % 4; ++m) {
                rows.push_back(polar_from_bits(bits(rng), n));
            }
            const auto cfg = hebbian_config(hebbian_weights(make_patterns(rows)));
            for (unsigned xb = 0; xb < (1U << n); ++xb) {
                const auto xi = polar_from_bits(xb, n);
                const std::vector<double> x(xi.begin(), xi.end());
                for (std::size_t i = 0; i < n; ++i) {
                    const auto r = local_field(cfg, x, i);
                    EXPECT_LE(std::abs(cfg.gamma * r.theta), kPi / 4 + 1e-15);
                    EXPECT_GE(r.phi, -1e-15);
                    EXPECT_LE(r.phi, kPi / 2 + 1e-15);
                }
            }
        }
    }
}

TEST(NeuronCircuit, TwoNeuronStructure) {
    const auto params = NeuronParams::from_hebbian(hebbian_config(hebbian_weights(make_patterns({{1, -1}}))));
    const auto ops = build_neuron_circuit(0, params);
    ASSERT_EQ(ops.size(), 3u);
    EXPECT_EQ(ops[0].kind, qsim::GateKind::CRY);
    EXPECT_EQ(ops[0].partner, 1u); // control
    EXPECT_EQ(ops[0].target, 2u);  // ancilla
    EXPECT_EQ(ops[1], qsim::GateOp::ry(2, params.b(0)));
    EXPECT_EQ(ops[2].kind, qsim::GateKind::SWAP);
    EXPECT_EQ(ops[2].target, 0u);
    EXPECT_EQ(ops[2].partner, 2u);
}

TEST(NeuronCircuit, GateCountAndRangeCheck) {
    Rng rng(24);
    for (std::size_t n = 1; n <= 7; ++n) {
        const auto p = random_params(rng, n);
        EXPECT_EQ(build_neuron_circuit(n - 1, p).size(), n + 1);
        EXPECT_THROW(build_neuron_circuit(n, p), ArgumentError);
        EXPECT_EQ(full_circuit(random_latent(rng, n), 0, p).size(), circuit_length(n));
    }
}

TEST(NeuronCircuit, CommutingRotationsAccumulateOnBasisInput) {
    // data |q2 q1 q0> = |110>, target 0: both controls on
    NeuronParams p;
    p.alpha = Matrix::Zero(3, 3);
    p.alpha(0, 1) = 0.4;
    p.alpha(0, 2) = -1.1;
    p.b = Vector::Zero(3);
    p.b(0) = 0.9;
    const std::vector<double> x{-1.0, 1.0, 1.0};
    const auto ops = full_circuit(x, 0, p);
    qsim::StateVector s(4);
    qsim::apply_circuit(s, ops);
    const double half = (0.4 - 1.1 + 0.9) / 2;
    EXPECT_NEAR(s.probability_one(0), std::sin(half) * std::sin(half), 1e-14);

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(16);
    psi0(0) = 1.0;
    const Eigen::VectorXcd ref = qsim::oracle::circuit_unitary_oracle(ops, 4) * psi0;
    EXPECT_LE((qsim::oracle::to_eigen(s) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(QhamForward, ZeroControlsWithHalfPiBiasGivesZeroExpectation) {
    NeuronParams p;
    p.alpha = Matrix::Zero(3, 3);
    p.b = Vector::Constant(3, kPi / 2);
    Rng rng(25);
    for (int t = 0; t < 10; ++t) {
        const auto z = qham_forward(random_latent(rng, 3), 1, p, kIdeal);
        EXPECT_NEAR(z[1], 0.0, 1e-15);
    }
    p.b.setZero();
    const auto z = qham_forward(random_latent(rng, 3), 2, p, kIdeal);
    EXPECT_NEAR(z[2], 1.0, 1e-15);
}

TEST(QhamForward, NonTargetQubitsKeepTheirEncoding) {
    Rng rng(26);
    const auto p = random_params(rng, 4);
    const auto x = random_latent(rng, 4);
    const auto z = qham_forward(x, 2, p, kIdeal);
    for (std::size_t i : {0, 1, 3}) {
        EXPECT_NEAR(z[i], -std::sin(x[i] * kPi / 2), 1e-14);
    }
}

TEST(QhamForward, HebbianUpdateRealizesTheLocalFieldAngle) {
    Rng rng(27);
    for (std::size_t n = 2; n <= 6; ++n) {
        std::uniform_int_distribution<unsigned> bits(0, (1U << n) - 1);
        std::vector<std::vector<int>> rows{polar_from_bits(bits(rng), n), polar_from_bits(bits(rng), n)};
        const auto cfg = hebbian_config(hebbian_weights(make_patterns(rows)));
        const auto params = NeuronParams::from_hebbian(cfg);
        for (unsigned xb = 0; xb < (1U << n); ++xb) {
            const auto xi = polar_from_bits(xb, n);
            const std::vector<double> x(xi.begin(), xi.end());
            for (std::size_t i = 0; i < n; ++i) {
                const double phi = local_field(cfg, x, i).phi;
                const double p1 = (1 - qham_forward(x, i, params, kIdeal)[i]) / 2;
                EXPECT_NEAR(p1, std::sin(phi) * std::sin(phi), 1e-12);
            }
        }
    }
}

TEST(QhamForward, StoredPatternIsAnAttractor) {
    for (std::size_t n = 2; n <= 6; ++n) {
        for (unsigned pb = 0; pb < (1U << n); ++pb) {
            const auto eps = polar_from_bits(pb, n);
            const auto params = NeuronParams::from_hebbian(hebbian_config(hebbian_weights(make_patterns({eps}))));
            const std::vector<double> x(eps.begin(), eps.end());
            for (std::size_t i = 0; i < n; ++i) {
                const double p1 = (1 - qham_forward(x, i, params, kIdeal)[i]) / 2;
                EXPECT_EQ(p1 > 0.5, eps[i] == 1) << "n=" << n << " pattern=" << pb << " target=" << i;
            }
        }
    }
}

TEST(QhamForward, MatchesDenseUnitaryOracle) {
    Rng rng(28);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t % 4);
        const auto p = random_params(rng, n);
        const auto x = random_latent(rng, n);
        const std::size_t target = static_cast<std::size_t>(t) % n;
        const auto ops = full_circuit(x, target, p);
        Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(1U << (n + 1)));
        psi0(0) = 1.0;
        const Eigen::VectorXcd ref = qsim::oracle::circuit_unitary_oracle(ops, n + 1) * psi0;
        qsim::StateVector s(n + 1);
        qsim::apply_circuit(s, ops);
        EXPECT_LE((qsim::oracle::to_eigen(s) - ref).cwiseAbs().maxCoeff(), 1e-10);
        const auto z = qham_forward(x, target, p, kIdeal);
        for (std::size_t q = 0; q < n; ++q) {
            double zq = 0;
            for (Eigen::Index k = 0; k < ref.size(); ++k) {
                zq += std::norm(ref(k)) * (((static_cast<std::size_t>(k) >> q) & 1U) != 0 ? -1.0 : 1.0);
            }
            EXPECT_NEAR(z[q], zq, 1e-10);
        }
    }
}

TEST(QhamForward, RejectsBadBackendAndInputs) {
    Rng rng(29);
    const auto p = random_params(rng, 3);
    BackendConfig bad;
    bad.kind = Backend::noisy;
    bad.noise = noise::sample_noise_spec(5, 3, 1); // wrong circuit length
    EXPECT_THROW(qham_forward(random_latent(rng, 3), 0, p, bad), ConfigurationError);
    EXPECT_THROW(qham_forward(random_latent(rng, 2), 0, p, kIdeal), ArgumentError);
    const std::vector<double> outside{0.0, 2.0, 0.0};
    EXPECT_THROW(qham_forward(outside, 0, p, kIdeal), ArgumentError);
    BackendConfig shots;
    shots.shots = 100;
    EXPECT_THROW(qham_forward(random_latent(rng, 3), 0, p, shots), ConfigurationError);
}

TEST(PickTarget, SingleNeuronAndSeededStream) {
    Rng a(30), b(30);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(pick_target(a, 1), 0u);
    }
    Rng c(31), d(31);
    for (int i = 0; i < 50; ++i) {
        EXPECT_EQ(pick_target(c, 8), pick_target(d, 8));
    }
    EXPECT_THROW(pick_target(a, 0), ArgumentError);
}

TEST(PickTarget, EmpiricalFrequenciesAreUniform) {
    Rng rng(32);
    constexpr std::size_t n = 8;
    constexpr int draws = 10000;
    std::array<int, n> counts{};
    for (int i = 0; i < draws; ++i) {
        ++counts[pick_target(rng, n)];
    }
    const double mean = static_cast<double>(draws) / n;
    const double sigma = std::sqrt(draws * (1.0 / n) * (1 - 1.0 / n));
    double chi2 = 0;
    for (int c : counts) {
        EXPECT_LE(std::abs(c - mean), 3 * sigma);
        chi2 += (c - mean) * (c - mean) / mean;
    }
    // 7 degrees of freedom: P(chi2 > 24.32) = 0.001
    EXPECT_LT(chi2, 24.32);
}

TEST(ParameterGradients, ZeroUpstreamGivesZeroGradients) {
    Rng rng(33);
    const auto p = random_params(rng, 4);
    const std::vector<double> up(4, 0.0);
    const auto g = parameter_gradients(p, random_latent(rng, 4), 1, up, true);
    EXPECT_EQ(g.alpha_row, Vector::Zero(4));
    EXPECT_EQ(g.b, 0.0);
    EXPECT_EQ(g.input, Vector::Zero(4));
}

TEST(ParameterGradients, NonFiniteUpstreamIsNumericError) {
    Rng rng(34);
    const auto p = random_params(rng, 2);
    const std::vector<double> up{1.0, std::nan("")};
    EXPECT_THROW(parameter_gradients(p, random_latent(rng, 2), 0, up), NumericError);
}

TEST(ParameterGradients, SingleBiasRotationMatchesFiniteDifference) {
    NeuronParams p;
    p.alpha = Matrix::Zero(1, 1);
    p.b = Vector::Constant(1, 0.8);
    const std::vector<double> x{0.3};
    const std::vector<double> up{1.0};
    const auto g = parameter_gradients(p, x, 0, up);
    auto f = [&](double b) {
        NeuronParams q = p;
        q.b(0) = b;
        return qham_forward(x, 0, q, kIdeal)[0];
    };
    const double h = 1e-6;
    EXPECT_NEAR(g.b, (f(0.8 + h) - f(0.8 - h)) / (2 * h), 1e-6);
    EXPECT_NEAR(g.b, -std::sin(0.8), 1e-14);
}

TEST(ParameterGradients, AllAnglesAndInputsMatchFiniteDifferences) {
    Rng rng(35);
    std::normal_distribution<double> gauss(0, 1);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(t % 3);
        const auto p = random_params(rng, n);
        auto x = random_latent(rng, n);
        for (auto &v : x) {
            v *= 0.99; // keep the stencil inside [-1, 1]
        }
        std::vector<double> up(n);
        for (auto &u : up) {
            u = gauss(rng);
        }
        const std::size_t target = static_cast<std::size_t>(t) % n;
        const auto g = parameter_gradients(p, x, target, up, true);
        const auto ti = static_cast<Eigen::Index>(target);
        for (std::size_t j = 0; j < n; ++j) {
            const auto ji = static_cast<Eigen::Index>(j);
            if (j != target) {
                auto f = [&](double a) {
                    NeuronParams q = p;
                    q.alpha(ti, ji) = a;
                    return contract(qham_forward(x, target, q, kIdeal), up);
                };
                worst = std::max(worst, rel_err(g.alpha_row(ji), central_diff(f, p.alpha(ti, ji))));
            } else {
                EXPECT_EQ(g.alpha_row(ji), 0.0);
            }
            auto fx = [&](double v) {
                auto y = x;
                y[j] = v;
                return contract(qham_forward(y, target, p, kIdeal), up);
            };
            worst = std::max(worst, rel_err(g.input(ji), central_diff(fx, x[j])));
        }
        auto fb = [&](double b) {
            NeuronParams q = p;
            q.b(ti) = b;
            return contract(qham_forward(x, target, q, kIdeal), up);
        };
        worst = std::max(worst, rel_err(g.b, central_diff(fb, p.b(ti))));
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(Checkpoint, NeuronAndHebbianJsonRoundTrip) {
    Rng rng(36);
    const auto p = random_params(rng, 5);
    const auto back = neuron_from_json(nlohmann::json::parse(to_json(p).dump()));
    EXPECT_EQ(back.alpha, p.alpha);
    EXPECT_EQ(back.b, p.b);
    const auto cfg = hebbian_config(hebbian_weights(make_patterns({{1, -1, 1}, {1, 1, -1}})));
    const auto hb = hebbian_from_json(nlohmann::json::parse(to_json(cfg).dump()));
    EXPECT_EQ(hb.W, cfg.W);
    EXPECT_EQ(hb.beta, cfg.beta);
    EXPECT_EQ(hb.gamma, cfg.gamma);
}
