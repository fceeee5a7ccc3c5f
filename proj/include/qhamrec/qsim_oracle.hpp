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
 * Reference constructions used by the test suites to check the simulator:
 * full circuit unitaries built from explicit Kronecker products, and a
 * general Mottonen state preparation for real non-negative amplitudes.
 *
 * Nothing here shares code with the bit-indexed kernels in qsim.hpp.
 */
#pragma once

#include "qsim.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <vector>

namespace qhamrec::qsim::oracle {

constexpr std::size_t kMaxOracleQubits = 5;

using CMatrix = Eigen::MatrixXcd;

inline CMatrix pauli_i() { return CMatrix::Identity(2, 2); }
inline CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
inline CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
inline CMatrix projector(int bit) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(bit, bit) = 1;
    return m;
}
inline CMatrix ry(double angle) {
    CMatrix m(2, 2);
    m << std::cos(angle / 2), -std::sin(angle / 2), std::sin(angle / 2), std::cos(angle / 2);
    return m;
}

/// kron(factors[q-1], ..., factors[0]); qubit 0 is the least significant bit.
inline CMatrix kron_chain(const std::vector<CMatrix> &factors) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (std::size_t i = factors.size(); i-- > 0;) {
        CMatrix next = Eigen::kroneckerProduct(out, factors[i]).eval();
        out = std::move(next);
    }
    return out;
}

inline CMatrix embed(std::size_t qubits,
                     std::initializer_list<std::pair<std::size_t, CMatrix>> placed) {
    std::vector<CMatrix> factors(qubits, pauli_i());
    for (const auto &[q, m] : placed) {
        factors[q] = m;
    }
    return kron_chain(factors);
}

inline CMatrix gate_unitary(const GateOp &op, std::size_t qubits) {
    validate(op, qubits);
    switch (op.kind) {
    case GateKind::RY:
        return embed(qubits, {{op.target, ry(op.angle)}});
    case GateKind::X:
        return embed(qubits, {{op.target, pauli_x()}});
    case GateKind::CRY:
        return embed(qubits, {{op.partner, projector(0)}}) +
               embed(qubits, {{op.partner, projector(1)}, {op.target, ry(op.angle)}});
    case GateKind::SWAP:
        return 0.5 * (embed(qubits, {}) +
                      embed(qubits, {{op.target, pauli_x()}, {op.partner, pauli_x()}}) +
                      embed(qubits, {{op.target, pauli_y()}, {op.partner, pauli_y()}}) +
                      embed(qubits, {{op.target, pauli_z()}, {op.partner, pauli_z()}}));
    }
    throw ArgumentError("unknown gate kind");
}

/// Product of the gate unitaries, first op applied first.
inline CMatrix circuit_unitary_oracle(const std::vector<GateOp> &ops, std::size_t qubits) {
    if (qubits > kMaxOracleQubits) {
        throw ArgumentError("unitary oracle refuses registers above " +
                            std::to_string(kMaxOracleQubits) + " qubits");
    }
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << qubits);
    CMatrix u = CMatrix::Identity(dim, dim);
    for (const auto &op : ops) {
        u = (gate_unitary(op, qubits) * u).eval();
    }
    return u;
}

inline Eigen::VectorXcd to_eigen(const StateVector &s) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s.dim()));
    for (std::size_t i = 0; i < s.dim(); ++i) {
        v(static_cast<Eigen::Index>(i)) = s.amplitudes()[i];
    }
    return v;
}

/**
 * @brief Mottonen-style preparation of a state with real non-negative
 * amplitudes from |0...0>.
 *
 * Works from the most significant qubit down: qubit k receives an RY
 * uniformly controlled by the already-prepared higher qubits, with the angle
 * splitting the remaining norm between the k=0 and k=1 halves.
 */
inline StateVector mottonen_prepare(const std::vector<double> &target) {
    std::size_t qubits = 0;
    while ((std::size_t{1} << qubits) < target.size()) {
        ++qubits;
    }
    if ((std::size_t{1} << qubits) != target.size() || target.empty()) {
        throw ArgumentError("target length must be a power of two");
    }
    double norm = 0.0;
    for (double t : target) {
        if (t < 0.0) {
            throw ArgumentError("mottonen_prepare expects non-negative amplitudes");
        }
        norm += t * t;
    }
    if (std::abs(norm - 1.0) > 1e-9) {
        throw ArgumentError("target state is not normalized");
    }

    // weight of the block sharing high bits `prefix` above position `bit`
    // and having bit `bit` equal to `value`
    auto block_weight = [&](std::size_t prefix, std::size_t bit, std::size_t value) {
        double w = 0.0;
        const std::size_t base = (prefix << (bit + 1)) | (value << bit);
        for (std::size_t low = 0; low < (std::size_t{1} << bit); ++low) {
            w += target[base | low] * target[base | low];
        }
        return w;
    };

    StateVector s(qubits);
    auto &a = s.amplitudes();
    for (std::size_t bit = qubits; bit-- > 0;) {
        for (std::size_t prefix = 0; prefix < (std::size_t{1} << (qubits - 1 - bit)); ++prefix) {
            const double w0 = block_weight(prefix, bit, 0);
            const double w1 = block_weight(prefix, bit, 1);
            const double angle = 2.0 * std::atan2(std::sqrt(w1), std::sqrt(w0));
            const std::size_t i0 = prefix << (bit + 1);
            const std::size_t i1 = i0 | (std::size_t{1} << bit);
            const Complex v0 = a[i0];
            const Complex v1 = a[i1];
            a[i0] = std::cos(angle / 2) * v0 - std::sin(angle / 2) * v1;
            a[i1] = std::sin(angle / 2) * v0 + std::cos(angle / 2) * v1;
        }
    }
    return s;
}

} // namespace qhamrec::qsim::oracle
