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
 * Exact simulation of small qubit registers.
 *
 * Two backends share one gate set {RY, CRY, SWAP, X}: a pure statevector and
 * a density matrix. Qubit 0 is the least-significant bit of the amplitude
 * index. A density matrix is stored row-major, so element (r, c) sits at
 * r * 2^q + c; viewed as a vector over 2q bits, the column index occupies
 * bits [0, q) and the row index bits [q, 2q). That lets U rho U^dagger reuse
 * the statevector kernels: U on the row bits, conj(U) on the column bits.
 */
#pragma once

#include "common.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qhamrec::qsim {

using Complex = std::complex<double>;
using Mat2 = std::array<Complex, 4>; // row-major 2x2

enum class GateKind { RY, CRY, SWAP, X };

inline std::string to_string(GateKind k) {
    switch (k) {
    case GateKind::RY:
        return "RY";
    case GateKind::CRY:
        return "CRY";
    case GateKind::SWAP:
        return "SWAP";
    case GateKind::X:
        return "X";
    }
    return "?";
}

/**
 * @brief One gate of the circuit.
 *
 * `target` is the rotated qubit for RY/CRY/X and the first qubit of a SWAP.
 * `partner` is the control of a CRY and the second qubit of a SWAP.
 */
struct GateOp {
    GateKind kind = GateKind::X;
    std::size_t target = 0;
    std::size_t partner = 0;
    double angle = 0.0;

    static GateOp ry(std::size_t target, double angle) { return {GateKind::RY, target, 0, angle}; }
    static GateOp cry(std::size_t control, std::size_t target, double angle) {
        return {GateKind::CRY, target, control, angle};
    }
    static GateOp swap(std::size_t a, std::size_t b) { return {GateKind::SWAP, a, b, 0.0}; }
    static GateOp x(std::size_t target) { return {GateKind::X, target, 0, 0.0}; }

    [[nodiscard]] bool two_qubit() const {
        return kind == GateKind::CRY || kind == GateKind::SWAP;
    }
    [[nodiscard]] bool parametrized() const {
        return kind == GateKind::RY || kind == GateKind::CRY;
    }

    friend bool operator==(const GateOp &, const GateOp &) = default;
};

/// One line per op: kind, qubits, angle. CRY lists control then target.
inline std::string describe(const GateOp &op) {
    std::ostringstream out;
    out.precision(17);
    out << to_string(op.kind);
    switch (op.kind) {
    case GateKind::RY:
        out << ' ' << op.target << ' ' << op.angle;
        break;
    case GateKind::CRY:
        out << ' ' << op.partner << ' ' << op.target << ' ' << op.angle;
        break;
    case GateKind::SWAP:
        out << ' ' << op.target << ' ' << op.partner;
        break;
    case GateKind::X:
        out << ' ' << op.target;
        break;
    }
    return out.str();
}

inline std::string dump_circuit(const std::vector<GateOp> &ops) {
    std::string out;
    for (const auto &op : ops) {
        out += describe(op);
        out += '\n';
    }
    return out;
}

inline void validate(const GateOp &op, std::size_t qubits) {
    if (op.target >= qubits || (op.two_qubit() && op.partner >= qubits)) {
        throw ArgumentError("gate " + describe(op) + " addresses a qubit outside a " +
                            std::to_string(qubits) + "-qubit register");
    }
    if (op.two_qubit() && op.partner == op.target) {
        throw ArgumentError("gate " + describe(op) + " needs two distinct qubits");
    }
    if (!std::isfinite(op.angle)) {
        throw NumericError("gate " + describe(op) + " has a non-finite angle");
    }
}

inline Mat2 ry_matrix(double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    return {Complex(c), Complex(-s), Complex(s), Complex(c)};
}

inline Mat2 x_matrix() { return {Complex(0), Complex(1), Complex(1), Complex(0)}; }

inline Mat2 conj(const Mat2 &m) {
    return {std::conj(m[0]), std::conj(m[1]), std::conj(m[2]), std::conj(m[3])};
}

namespace kernels {

/// Applies `m` to bit `bit` on every index whose `ctrl_mask` bits are all set.
inline void apply_1q(std::vector<Complex> &v, std::size_t bit, const Mat2 &m,
                     std::size_t ctrl_mask = 0) {
    const std::size_t stride = std::size_t{1} << bit;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if ((i & stride) != 0 || (i & ctrl_mask) != ctrl_mask) {
            continue;
        }
        const Complex a = v[i];
        const Complex b = v[i | stride];
        v[i] = m[0] * a + m[1] * b;
        v[i | stride] = m[2] * a + m[3] * b;
    }
}

inline void apply_swap(std::vector<Complex> &v, std::size_t bit_a, std::size_t bit_b) {
    const std::size_t ma = std::size_t{1} << bit_a;
    const std::size_t mb = std::size_t{1} << bit_b;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if ((i & ma) != 0 && (i & mb) == 0) {
            std::swap(v[i], v[i ^ ma ^ mb]);
        }
    }
}

/// Applies `op` with every qubit index shifted by `offset`; `conjugate`
/// uses conj(U) instead of U.
inline void apply(std::vector<Complex> &v, const GateOp &op, std::size_t offset,
                  bool conjugate) {
    switch (op.kind) {
    case GateKind::RY: {
        auto m = ry_matrix(op.angle);
        apply_1q(v, op.target + offset, conjugate ? conj(m) : m);
        break;
    }
    case GateKind::CRY: {
        auto m = ry_matrix(op.angle);
        apply_1q(v, op.target + offset, conjugate ? conj(m) : m,
                 std::size_t{1} << (op.partner + offset));
        break;
    }
    case GateKind::SWAP:
        apply_swap(v, op.target + offset, op.partner + offset);
        break;
    case GateKind::X:
        apply_1q(v, op.target + offset, x_matrix());
        break;
    }
}

} // namespace kernels

class StateVector {
  public:
    StateVector() = default;

    /// |0...0> on `qubits` qubits.
    explicit StateVector(std::size_t qubits)
        : qubits_(qubits), amps_(std::size_t{1} << qubits, Complex(0.0)) {
        amps_[0] = 1.0;
    }

    StateVector(std::size_t qubits, std::vector<Complex> amps)
        : qubits_(qubits), amps_(std::move(amps)) {
        if (amps_.size() != (std::size_t{1} << qubits)) {
            throw ArgumentError("statevector length must be 2^qubits");
        }
    }

    [[nodiscard]] std::size_t qubits() const { return qubits_; }
    [[nodiscard]] std::size_t dim() const { return amps_.size(); }
    [[nodiscard]] const std::vector<Complex> &amplitudes() const { return amps_; }
    [[nodiscard]] std::vector<Complex> &amplitudes() { return amps_; }

    [[nodiscard]] double norm_squared() const {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    [[nodiscard]] double probability_one(std::size_t qubit) const {
        if (qubit >= qubits_) {
            throw ArgumentError("qubit index out of range");
        }
        const std::size_t mask = std::size_t{1} << qubit;
        double p = 0.0;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if ((i & mask) != 0) {
                p += std::norm(amps_[i]);
            }
        }
        return p;
    }

  private:
    std::size_t qubits_ = 0;
    std::vector<Complex> amps_;
};

class DensityMatrix {
  public:
    DensityMatrix() = default;

    explicit DensityMatrix(std::size_t qubits)
        : qubits_(qubits), dim_(std::size_t{1} << qubits), rho_(dim_ * dim_, Complex(0.0)) {
        rho_[0] = 1.0;
    }

    /// |psi><psi|
    static DensityMatrix from_pure(const StateVector &psi) {
        DensityMatrix d;
        d.qubits_ = psi.qubits();
        d.dim_ = psi.dim();
        d.rho_.resize(d.dim_ * d.dim_);
        const auto &a = psi.amplitudes();
        for (std::size_t r = 0; r < d.dim_; ++r) {
            for (std::size_t c = 0; c < d.dim_; ++c) {
                d.rho_[r * d.dim_ + c] = a[r] * std::conj(a[c]);
            }
        }
        return d;
    }

    [[nodiscard]] std::size_t qubits() const { return qubits_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] Complex operator()(std::size_t r, std::size_t c) const { return rho_[r * dim_ + c]; }
    [[nodiscard]] const std::vector<Complex> &data() const { return rho_; }
    [[nodiscard]] std::vector<Complex> &data() { return rho_; }

    [[nodiscard]] Complex trace() const {
        Complex t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            t += rho_[i * dim_ + i];
        }
        return t;
    }

    /// Largest |rho - rho^dagger| entry.
    [[nodiscard]] double hermiticity_error() const {
        double e = 0.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            for (std::size_t c = r; c < dim_; ++c) {
                e = std::max(e, std::abs(rho_[r * dim_ + c] - std::conj(rho_[c * dim_ + r])));
            }
        }
        return e;
    }

    [[nodiscard]] double probability_one(std::size_t qubit) const {
        if (qubit >= qubits_) {
            throw ArgumentError("qubit index out of range");
        }
        const std::size_t mask = std::size_t{1} << qubit;
        double p = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            if ((i & mask) != 0) {
                p += rho_[i * dim_ + i].real();
            }
        }
        return p;
    }

  private:
    std::size_t qubits_ = 0;
    std::size_t dim_ = 0;
    std::vector<Complex> rho_;
};

inline void apply_gate(StateVector &state, const GateOp &op) {
    validate(op, state.qubits());
    kernels::apply(state.amplitudes(), op, 0, false);
}

/// rho -> U rho U^dagger
inline void apply_gate(DensityMatrix &rho, const GateOp &op) {
    validate(op, rho.qubits());
    kernels::apply(rho.data(), op, rho.qubits(), false);
    kernels::apply(rho.data(), op, 0, true);
}

template <typename State> void apply_circuit(State &state, const std::vector<GateOp> &ops) {
    for (const auto &op : ops) {
        apply_gate(state, op);
    }
}

/// <Z> = P(0) - P(1), exact.
template <typename State> double expectation_z(const State &state, std::size_t qubit) {
    return 1.0 - 2.0 * state.probability_one(qubit);
}

inline void check_probability(double p, const char *what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ArgumentError(std::string(what) + " must lie in [0,1]");
    }
}

/// rho -> (1-p) rho + p X rho X on `qubit`.
inline void apply_bitflip(DensityMatrix &rho, std::size_t qubit, double p) {
    check_probability(p, "bit-flip probability");
    if (qubit >= rho.qubits()) {
        throw ArgumentError("qubit index out of range");
    }
    if (p == 0.0) {
        return;
    }
    const std::size_t dim = rho.dim();
    const std::size_t m = std::size_t{1} << qubit;
    auto &d = rho.data();
    // (r,c) pairs with (r^m, c^m); visit each pair once via r's bit clear.
    for (std::size_t r = 0; r < dim; ++r) {
        if ((r & m) != 0) {
            continue;
        }
        for (std::size_t c = 0; c < dim; ++c) {
            const std::size_t a = r * dim + c;
            const std::size_t b = (r ^ m) * dim + (c ^ m);
            const Complex va = d[a];
            const Complex vb = d[b];
            d[a] = (1.0 - p) * va + p * vb;
            d[b] = (1.0 - p) * vb + p * va;
        }
    }
}

struct OutcomeProbs {
    double p0 = 1.0;
    double p1 = 0.0;

    static OutcomeProbs from_z(double z) {
        const double p1 = std::clamp((1.0 - z) / 2.0, 0.0, 1.0);
        return {1.0 - p1, p1};
    }
    [[nodiscard]] double z() const { return p0 - p1; }
};

/**
 * Classical confusion on one measured qubit: `p01` is P(read 1 | true 0),
 * `p10` is P(read 0 | true 1).
 */
inline OutcomeProbs apply_readout_error(const OutcomeProbs &probs, double p01, double p10) {
    check_probability(probs.p0, "P(0)");
    check_probability(probs.p1, "P(1)");
    check_probability(p01, "p01");
    check_probability(p10, "p10");
    if (std::abs(probs.p0 + probs.p1 - 1.0) > 1e-9) {
        throw ArgumentError("outcome distribution must sum to 1");
    }
    const double p1 = (1.0 - p10) * probs.p1 + p01 * probs.p0;
    return {1.0 - p1, p1};
}

/// Per-qubit RY(2(x*pi/4 + pi/4)) so that P(1) = sin^2(x*pi/4 + pi/4).
inline std::vector<GateOp> input_encoding_ops(std::span<const double> x) {
    std::vector<GateOp> ops;
    ops.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= -1.0 && x[i] <= 1.0)) {
            throw ArgumentError("input entry " + std::to_string(i) + " outside [-1,1]");
        }
        ops.push_back(GateOp::ry(i, 2.0 * (x[i] * kPi / 4.0 + kPi / 4.0)));
    }
    return ops;
}

/// Product state for `x` on the first x.size() qubits, ancillas in |0>.
inline StateVector prepare_input(std::span<const double> x, std::size_t ancilla_count = 1) {
    const auto ops = input_encoding_ops(x);
    StateVector s(x.size() + ancilla_count);
    apply_circuit(s, ops);
    return s;
}

/// Estimates <Z> from `shots` samples of a qubit with P(1) = p1.
inline double sample_expectation_z(double p1, std::size_t shots, Rng &rng) {
    if (shots == 0) {
        return 1.0 - 2.0 * p1;
    }
    std::binomial_distribution<std::size_t> draw(shots, std::clamp(p1, 0.0, 1.0));
    const auto ones = static_cast<double>(draw(rng));
    return 1.0 - 2.0 * ones / static_cast<double>(shots);
}

} // namespace qhamrec::qsim
