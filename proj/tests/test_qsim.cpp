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

#include "qhamrec/qsim.hpp"
#include "qhamrec/qsim_oracle.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace qhamrec;
using namespace qhamrec::qsim;

namespace {

std::vector<GateOp> random_circuit(Rng &rng, std::size_t qubits, std::size_t length) {
    std::uniform_real_distribution<double> angle(-2 * kPi, 2 * kPi);
    std::uniform_int_distribution<std::size_t> q(0, qubits - 1);
    std::uniform_int_distribution<int> kind(0, qubits > 1 ? 3 : 1);
    std::vector<GateOp> ops;
    while (ops.size() < length) {
        const auto a = q(rng);
        auto b = q(rng);
        switch (kind(rng)) {
        case 0:
            ops.push_back(GateOp::ry(a, angle(rng)));
            break;
        case 1:
            ops.push_back(GateOp::x(a));
            break;
        case 2:
            if (a != b) {
                ops.push_back(GateOp::cry(a, b, angle(rng)));
            }
            break;
        default:
            if (a != b) {
                ops.push_back(GateOp::swap(a, b));
            }
        }
    }
    return ops;
}

double max_amp_diff(const StateVector &s, const Eigen::VectorXcd &v) {
    return (oracle::to_eigen(s) - v).cwiseAbs().maxCoeff();
}

} // namespace

TEST(PrepareInput, EncodingEndpoints) {
    for (const auto &[x, p1] : std::vector<std::pair<double, double>>{{-1.0, 0.0}, {0.0, 0.5}, {1.0, 1.0}}) {
        const std::vector<double> in{x};
        const auto s = prepare_input(in);
        EXPECT_NEAR(s.probability_one(0), p1, 1e-12) << "x=" << x;
        EXPECT_NEAR(s.probability_one(1), 0.0, 1e-15) << "ancilla must stay |0>";
    }
}

TEST(PrepareInput, ProductStateMatchesEncodingFormula) {
    const std::vector<double> x{-0.4, 0.9, 0.1};
    const auto s = prepare_input(x, 2);
    EXPECT_EQ(s.qubits(), 5u);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i] * kPi / 4 + kPi / 4;
        EXPECT_NEAR(s.probability_one(i), std::sin(a) * std::sin(a), 1e-14);
    }
}

TEST(PrepareInput, RejectsEntriesOutsideUnitInterval) {
    const std::vector<double> x{0.2, 1.0000001};
    EXPECT_THROW(prepare_input(x), ArgumentError);
    const std::vector<double> nan{std::nan("")};
    EXPECT_THROW(prepare_input(nan), ArgumentError);
}

TEST(PrepareInput, CoincidesWithMottonenPreparationOfTheProductState) {
    Rng rng(12);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x(3);
        for (auto &v : x) {
            v = u(rng);
        }
        // product amplitudes, qubit 0 least significant, ancilla in |0>
        std::vector<double> target(16, 0.0);
        for (std::size_t idx = 0; idx < 8; ++idx) {
            double a = 1.0;
            for (std::size_t q = 0; q < 3; ++q) {
                const double ang = x[q] * kPi / 4 + kPi / 4;
                a *= ((idx >> q) & 1U) != 0 ? std::sin(ang) : std::cos(ang);
            }
            target[idx] = a;
        }
        const auto mot = oracle::mottonen_prepare(target);
        EXPECT_LE(max_amp_diff(prepare_input(x), oracle::to_eigen(mot)), 1e-12);
    }
}

TEST(MottonenOracle, PreparesEntangledTargets) {
    Rng rng(13);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> target(8);
        double n = 0;
        for (auto &v : target) {
            v = u(rng);
            n += v * v;
        }
        for (auto &v : target) {
            v /= std::sqrt(n);
        }
        const auto s = oracle::mottonen_prepare(target);
        for (std::size_t i = 0; i < 8; ++i) {
            EXPECT_NEAR(s.amplitudes()[i].real(), target[i], 1e-12);
            EXPECT_NEAR(s.amplitudes()[i].imag(), 0.0, 1e-15);
        }
    }
}

TEST(ApplyGate, TextbookCases) {
    StateVector s(1);
    apply_gate(s, GateOp::ry(0, kPi));
    EXPECT_NEAR(s.probability_one(0), 1.0, 1e-15);

    StateVector two(2);
    apply_gate(two, GateOp::x(0)); // |01> in q1 q0 notation
    apply_gate(two, GateOp::swap(0, 1));
    EXPECT_NEAR(std::abs(two.amplitudes()[2]), 1.0, 1e-15);

    const double theta = 0.7;
    StateVector c(2);
    apply_gate(c, GateOp::x(0));
    apply_gate(c, GateOp::cry(0, 1, 2 * theta));
    EXPECT_NEAR(c.probability_one(1), std::sin(theta) * std::sin(theta), 1e-15);

    StateVector off(2);
    apply_gate(off, GateOp::cry(0, 1, 2 * theta));
    EXPECT_NEAR(off.probability_one(1), 0.0, 1e-15) << "control in |0> must not rotate";
}

TEST(ApplyGate, ExpectationZOfBasisAndEqualSuperposition) {
    StateVector s(1);
    EXPECT_DOUBLE_EQ(expectation_z(s, 0), 1.0);
    apply_gate(s, GateOp::x(0));
    EXPECT_DOUBLE_EQ(expectation_z(s, 0), -1.0);
    const std::vector<double> zero{0.0};
    EXPECT_NEAR(expectation_z(prepare_input(zero, 0), 0), 0.0, 1e-15);
}

TEST(ApplyGate, InvalidOpsAreArgumentErrors) {
    StateVector s(2);
    EXPECT_THROW(apply_gate(s, GateOp::ry(2, 0.1)), ArgumentError);
    EXPECT_THROW(apply_gate(s, GateOp::cry(1, 1, 0.1)), ArgumentError);
    EXPECT_THROW(apply_gate(s, GateOp::swap(0, 0)), ArgumentError);
    EXPECT_THROW(apply_gate(s, GateOp::ry(0, std::numeric_limits<double>::infinity())), NumericError);
}

TEST(Oracle, EmptyCircuitIsIdentityAndXIsPauliX) {
    EXPECT_TRUE(oracle::circuit_unitary_oracle({}, 3).isIdentity(0.0));
    const auto x = oracle::circuit_unitary_oracle({GateOp::x(0)}, 1);
    EXPECT_EQ(x, oracle::pauli_x());
    EXPECT_THROW(oracle::circuit_unitary_oracle({}, 6), ArgumentError);
}

TEST(Oracle, RandomCircuitsMatchGateChains) {
    Rng rng(2024);
    for (std::size_t q = 1; q <= 5; ++q) {
        for (int t = 0; t < 40; ++t) {
            const auto ops = random_circuit(rng, q, 3 + static_cast<std::size_t>(t % 8));
            StateVector s(q);
            apply_circuit(s, ops);
            Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(1U << q));
            psi0(0) = 1.0;
            EXPECT_LE(max_amp_diff(s, oracle::circuit_unitary_oracle(ops, q) * psi0), 1e-10)
                << dump_circuit(ops);
        }
    }
}

TEST(Oracle, UnitariesAreUnitary) {
    Rng rng(5);
    const auto ops = random_circuit(rng, 4, 12);
    const auto u = oracle::circuit_unitary_oracle(ops, 4);
    EXPECT_TRUE((u.adjoint() * u).isIdentity(1e-12));
}

TEST(StateVectorInvariant, NormPreservedOverLongChains) {
    Rng rng(6);
    StateVector s(6);
    apply_circuit(s, random_circuit(rng, 6, 1000));
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-10);
}

TEST(DensityMatrixBackend, AgreesWithStatevectorOnNoiselessCircuits) {
    Rng rng(7);
    for (int t = 0; t < 30; ++t) {
        const std::size_t q = 1 + static_cast<std::size_t>(t % 5);
        const auto ops = random_circuit(rng, q, 15);
        StateVector s(q);
        DensityMatrix rho(q);
        apply_circuit(s, ops);
        apply_circuit(rho, ops);
        const auto pure = DensityMatrix::from_pure(s);
        double worst = 0.0;
        for (std::size_t i = 0; i < rho.data().size(); ++i) {
            worst = std::max(worst, std::abs(rho.data()[i] - pure.data()[i]));
        }
        EXPECT_LE(worst, 1e-10);
        for (std::size_t k = 0; k < q; ++k) {
            EXPECT_NEAR(expectation_z(rho, k), expectation_z(s, k), 1e-10);
        }
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-10);
        EXPECT_LE(rho.hermiticity_error(), 1e-10);
    }
}

TEST(BitFlip, ScalesExpectationByOneMinusTwoP) {
    Rng rng(8);
    std::uniform_real_distribution<double> up(0, 1);
    for (int t = 0; t < 20; ++t) {
        const auto ops = random_circuit(rng, 3, 10);
        DensityMatrix rho(3);
        apply_circuit(rho, ops);
        const double p = up(rng);
        const double before = expectation_z(rho, 1);
        const double other = expectation_z(rho, 0);
        apply_bitflip(rho, 1, p);
        EXPECT_NEAR(expectation_z(rho, 1), (1 - 2 * p) * before, 1e-12);
        EXPECT_NEAR(expectation_z(rho, 0), other, 1e-12);
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
    }
}

TEST(BitFlip, HandCases) {
    DensityMatrix rho(1);
    apply_bitflip(rho, 0, 0.0);
    EXPECT_EQ(rho(0, 0), Complex(1.0));
    apply_bitflip(rho, 0, 0.2);
    EXPECT_NEAR(expectation_z(rho, 0), 0.6, 1e-15);
    DensityMatrix half(2);
    apply_gate(half, GateOp::ry(0, 1.1));
    apply_bitflip(half, 0, 0.5);
    EXPECT_NEAR(expectation_z(half, 0), 0.0, 1e-15);
    EXPECT_THROW(apply_bitflip(half, 0, 1.5), ArgumentError);
    EXPECT_THROW(apply_bitflip(half, 2, 0.1), ArgumentError);
}

TEST(BitFlip, KeepsStatePositiveSemidefinite) {
    Rng rng(9);
    DensityMatrix rho(3);
    const auto ops = random_circuit(rng, 3, 12);
    for (std::size_t i = 0; i < ops.size(); ++i) {
        apply_gate(rho, ops[i]);
        apply_bitflip(rho, i % 3, 0.05 * static_cast<double>(i % 4));
    }
    Eigen::MatrixXcd m(8, 8);
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 8; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rho(r, c);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(ReadoutError, ConfusionHandCases) {
    const auto same = apply_readout_error({0.3, 0.7}, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(same.p1, 0.7);
    EXPECT_NEAR(apply_readout_error({0.0, 1.0}, 0.0, 0.07).p1, 0.93, 1e-15);
    EXPECT_NEAR(apply_readout_error({1.0, 0.0}, 0.01, 0.0).p1, 0.01, 1e-15);
    EXPECT_THROW(apply_readout_error({0.5, 0.6}, 0.0, 0.0), ArgumentError);
    EXPECT_THROW(apply_readout_error({0.5, 0.5}, -0.1, 0.0), ArgumentError);
}

TEST(ShotSampling, ZeroShotsIsExactAndManyShotsConverge) {
    Rng rng(10);
    EXPECT_DOUBLE_EQ(sample_expectation_z(0.3, 0, rng), 0.4);
    const double est = sample_expectation_z(0.3, 1'000'000, rng);
    EXPECT_NEAR(est, 0.4, 5 * 2 * std::sqrt(0.3 * 0.7 / 1e6));
}

TEST(CircuitDump, OneOpPerLine) {
    const auto text = dump_circuit({GateOp::cry(1, 2, 0.5), GateOp::ry(2, 0.25), GateOp::swap(0, 2)});
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_NE(text.find("CRY"), std::string::npos);
    EXPECT_NE(text.find("SWAP"), std::string::npos);
}
