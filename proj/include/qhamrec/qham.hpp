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
 * Variational quantum Hopfield associative memory.
 *
 * Register layout: data qubits 0..n-1 hold the encoded latent, qubit n is a
 * fresh ancilla. Updating neuron i runs
 *
 *     CRY(alpha[i][j]) control j -> ancilla   for every j != i
 *     RY(b[i]) on the ancilla
 *     SWAP(i, ancilla)
 *
 * so data qubit i ends up holding the neuron output. With the Hebbian
 * initialization alpha[i][j] = 4 gamma w_ij and b[i] = 2 beta_i, a polar
 * input x gives P(1) = sin^2(gamma * theta_i + pi/4) on qubit i, where
 * theta_i = sum_{j != i} w_ij x_j is the classical local field.
 */
#pragma once

#include "archetypes.hpp"
#include "common.hpp"
#include "noise.hpp"
#include "qsim.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace qhamrec::qham {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// w_ij = (1/m) sum_mu eps_i^mu eps_j^mu
inline Matrix hebbian_weights(const archetypes::PatternSet &patterns) {
    if (patterns.size() == 0) {
        throw ArgumentError("hebbian_weights: empty pattern set");
    }
    const auto n = static_cast<Eigen::Index>(patterns.n);
    Matrix w = Matrix::Zero(n, n);
    for (const auto &p : patterns.patterns) {
        if (static_cast<Eigen::Index>(p.bits.size()) != n) {
            throw ArgumentError("hebbian_weights: pattern length mismatch");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                w(i, j) += static_cast<double>(p.bits[static_cast<std::size_t>(i)] *
                                               p.bits[static_cast<std::size_t>(j)]);
            }
        }
    }
    return w / static_cast<double>(patterns.size());
}

struct HebbianConfig {
    Matrix W;
    double gamma = 0.0;
    Vector beta;
    std::size_t n = 0;
    double w_max = 0.0;
};

/**
 * @brief gamma = (pi/4) / (n * w_max) and
 * beta_i = pi/4 - gamma * sum_{j != i} w_ij.
 *
 * The diagonal never enters a circuit (a neuron does not control itself),
 * so it is left out of the bias as well.
 */
inline HebbianConfig hebbian_config(const Matrix &W) {
    if (W.rows() != W.cols() || W.rows() == 0) {
        throw ArgumentError("hebbian_config: W must be square and non-empty");
    }
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ArgumentError("hebbian_config: W must be symmetric");
    }
    HebbianConfig cfg;
    cfg.W = W;
    cfg.n = static_cast<std::size_t>(W.rows());
    cfg.w_max = W.cwiseAbs().maxCoeff();
    if (cfg.w_max == 0.0) {
        throw ConfigurationError("hebbian_config: all-zero weight matrix leaves gamma undefined");
    }
    cfg.gamma = (kPi / 4.0) / (static_cast<double>(cfg.n) * cfg.w_max);
    cfg.beta.resize(W.rows());
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        cfg.beta(i) = kPi / 4.0 - cfg.gamma * (W.row(i).sum() - W(i, i));
    }
    return cfg;
}

struct LocalFieldReport {
    double theta = 0.0;
    double phi = 0.0;
};

/// theta = sum_{j != target} w_ij x_j, phi = gamma theta + pi/4
inline LocalFieldReport local_field(const HebbianConfig &cfg, std::span<const double> x,
                                    std::size_t target) {
    if (x.size() != cfg.n || target >= cfg.n) {
        throw ArgumentError("local_field: dimension mismatch");
    }
    LocalFieldReport r;
    for (std::size_t j = 0; j < cfg.n; ++j) {
        if (j != target) {
            r.theta += cfg.W(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(j)) * x[j];
        }
    }
    r.phi = cfg.gamma * r.theta + kPi / 4.0;
    return r;
}

struct NeuronParams {
    Matrix alpha; // alpha(i, j): rotation controlled by j when updating i
    Vector b;
    bool trainable = true;

    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(b.size()); }

    static NeuronParams from_hebbian(const HebbianConfig &cfg) {
        NeuronParams p;
        p.alpha = 4.0 * cfg.gamma * cfg.W;
        p.alpha.diagonal().setZero();
        p.b = 2.0 * cfg.beta;
        return p;
    }
};

inline std::size_t ancilla_index(std::size_t n) { return n; }

/// Encoding RYs plus neuron circuit: 2n + 1 gates.
inline std::size_t circuit_length(std::size_t n) { return 2 * n + 1; }

inline std::vector<qsim::GateOp> build_neuron_circuit(std::size_t target,
                                                      const NeuronParams &params) {
    const std::size_t n = params.n();
    if (target >= n) {
        throw ArgumentError("build_neuron_circuit: target " + std::to_string(target) +
                            " out of range for " + std::to_string(n) + " neurons");
    }
    const std::size_t anc = ancilla_index(n);
    const auto row = static_cast<Eigen::Index>(target);
    std::vector<qsim::GateOp> ops;
    ops.reserve(n + 1);
    for (std::size_t j = 0; j < n; ++j) {
        if (j != target) {
            ops.push_back(qsim::GateOp::cry(j, anc, params.alpha(row, static_cast<Eigen::Index>(j))));
        }
    }
    ops.push_back(qsim::GateOp::ry(anc, params.b(row)));
    ops.push_back(qsim::GateOp::swap(target, anc));
    return ops;
}

inline std::vector<qsim::GateOp> full_circuit(std::span<const double> latent, std::size_t target,
                                              const NeuronParams &params) {
    if (latent.size() != params.n()) {
        throw ArgumentError("latent length " + std::to_string(latent.size()) +
                            " != neuron count " + std::to_string(params.n()));
    }
    auto ops = qsim::input_encoding_ops(latent);
    auto neuron = build_neuron_circuit(target, params);
    ops.insert(ops.end(), neuron.begin(), neuron.end());
    return ops;
}

enum class Backend { ideal, noisy };
enum class NoisyEngine { branches, density };

inline std::string to_string(Backend b) { return b == Backend::ideal ? "ideal" : "noisy"; }
inline Backend backend_from_string(const std::string &s) {
    if (s == "ideal") {
        return Backend::ideal;
    }
    if (s == "noisy") {
        return Backend::noisy;
    }
    throw ConfigurationError("unknown backend '" + s + "' (expected ideal|noisy)");
}
inline std::string to_string(NoisyEngine e) {
    return e == NoisyEngine::branches ? "branches" : "density";
}
inline NoisyEngine engine_from_string(const std::string &s) {
    if (s == "branches") {
        return NoisyEngine::branches;
    }
    if (s == "density") {
        return NoisyEngine::density;
    }
    throw ConfigurationError("unknown noisy engine '" + s + "' (expected branches|density)");
}

struct BackendConfig {
    Backend kind = Backend::ideal;
    noise::NoiseSpec noise;
    NoisyEngine engine = NoisyEngine::branches;
    std::size_t shots = 0; // 0 = exact expectations
};

namespace detail {

inline std::vector<double> data_z(const qsim::StateVector &s, std::size_t n) {
    std::vector<double> z(n);
    for (std::size_t q = 0; q < n; ++q) {
        z[q] = qsim::expectation_z(s, q);
    }
    return z;
}

inline std::vector<double> ideal_z(const std::vector<qsim::GateOp> &ops, std::size_t n) {
    qsim::StateVector s(n + 1);
    qsim::apply_circuit(s, ops);
    return data_z(s, n);
}

} // namespace detail

/**
 * @brief <Z> of the n data qubits after one neuron update of `target`.
 *
 * The noisy backend applies the bound noise spec's bit flips during the
 * circuit and its readout confusion to the measured values.
 */
inline std::vector<double> qham_forward(std::span<const double> latent, std::size_t target,
                                        const NeuronParams &params, const BackendConfig &backend,
                                        Rng *shot_rng = nullptr) {
    const std::size_t n = params.n();
    const auto ops = full_circuit(latent, target, params);
    std::vector<double> z;
    if (backend.kind == Backend::ideal) {
        z = detail::ideal_z(ops, n);
    } else {
        if (backend.noise.circuit_len != ops.size()) {
            throw ConfigurationError("noise spec bound to a " +
                                     std::to_string(backend.noise.circuit_len) +
                                     "-gate circuit, QHAM circuit has " +
                                     std::to_string(ops.size()));
        }
        if (backend.engine == NoisyEngine::density) {
            auto rho = noise::apply_noisy_circuit(qsim::DensityMatrix(n + 1), ops, backend.noise);
            z.resize(n);
            for (std::size_t q = 0; q < n; ++q) {
                z[q] = qsim::expectation_z(rho, q);
            }
        } else {
            z = noise::branch_expectations(qsim::StateVector(n + 1), ops, backend.noise, n);
        }
        z = noise::apply_readout_sites(std::move(z), backend.noise);
    }
    if (backend.shots > 0) {
        if (shot_rng == nullptr) {
            throw ConfigurationError("shot sampling requires an RNG stream");
        }
        for (auto &v : z) {
            v = qsim::sample_expectation_z((1.0 - v) / 2.0, backend.shots, *shot_rng);
        }
    }
    return z;
}

inline std::size_t pick_target(Rng &rng, std::size_t n) {
    if (n == 0) {
        throw ArgumentError("pick_target: no neurons");
    }
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(rng);
}

struct NeuronGradient {
    Vector alpha_row; // d loss / d alpha(target, j); entry `target` is 0
    double b = 0.0;   // d loss / d b(target)
    Vector input;     // d loss / d latent, filled when requested
};

// Two-term shift for RY (generator Y/2) and four-term shift for CRY (generator
// |1><1| (x) Y/2, eigenvalues {0, +-1/2}).
constexpr double kShiftCoeffPlus = (std::numbers::sqrt2 + 1.0) / (4.0 * std::numbers::sqrt2);
constexpr double kShiftCoeffMinus = (std::numbers::sqrt2 - 1.0) / (4.0 * std::numbers::sqrt2);

/**
 * @brief Exact gradient of sum_q upstream[q] * <Z_q> with respect to row
 * `target` of alpha, b[target] and optionally the latent input, via
 * parameter-shift rules on the noise-free circuit.
 */
inline NeuronGradient parameter_gradients(const NeuronParams &params, std::span<const double> latent,
                                          std::size_t target, std::span<const double> upstream,
                                          bool with_input = false) {
    const std::size_t n = params.n();
    if (upstream.size() != n) {
        throw ArgumentError("upstream length must equal the neuron count");
    }
    if (!all_finite(upstream)) {
        throw NumericError("non-finite upstream gradient");
    }
    NeuronGradient g;
    g.alpha_row = Vector::Zero(static_cast<Eigen::Index>(n));
    bool any = false;
    for (double u : upstream) {
        any = any || u != 0.0;
    }
    if (with_input) {
        g.input = Vector::Zero(static_cast<Eigen::Index>(n));
    }
    auto ops = full_circuit(latent, target, params);
    if (!any) {
        return g;
    }

    // shared prefix: the encoded input state
    qsim::StateVector encoded(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        qsim::apply_gate(encoded, ops[i]);
    }
    auto contract = [&](const std::vector<double> &z) {
        double s = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            s += upstream[q] * z[q];
        }
        return s;
    };
    auto eval_shifted = [&](std::size_t gate, double shift) {
        const double saved = ops[gate].angle;
        ops[gate].angle = saved + shift;
        double value = 0.0;
        if (gate >= n) {
            qsim::StateVector s = encoded;
            for (std::size_t k = n; k < ops.size(); ++k) {
                qsim::apply_gate(s, ops[k]);
            }
            value = contract(detail::data_z(s, n));
        } else {
            value = contract(detail::ideal_z(ops, n));
        }
        ops[gate].angle = saved;
        return value;
    };
    auto two_term = [&](std::size_t gate) {
        return 0.5 * (eval_shifted(gate, kPi / 2.0) - eval_shifted(gate, -kPi / 2.0));
    };
    auto four_term = [&](std::size_t gate) {
        return kShiftCoeffPlus * (eval_shifted(gate, kPi / 2.0) - eval_shifted(gate, -kPi / 2.0)) -
               kShiftCoeffMinus *
                   (eval_shifted(gate, 3.0 * kPi / 2.0) - eval_shifted(gate, -3.0 * kPi / 2.0));
    };

    for (std::size_t k = n; k < ops.size(); ++k) {
        const auto &op = ops[k];
        if (op.kind == qsim::GateKind::CRY) {
            g.alpha_row(static_cast<Eigen::Index>(op.partner)) = four_term(k);
        } else if (op.kind == qsim::GateKind::RY) {
            g.b = two_term(k);
        }
    }
    if (with_input) {
        // encoding angle 2(x pi/4 + pi/4) has d angle / dx = pi/2
        for (std::size_t i = 0; i < n; ++i) {
            g.input(static_cast<Eigen::Index>(i)) = (kPi / 2.0) * two_term(i);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------

inline nlohmann::json matrix_to_json(const Matrix &m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            flat.push_back(m(i, j));
        }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

inline Matrix matrix_from_json(const nlohmann::json &j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto flat = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
        throw IoError("matrix payload size mismatch");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) {
            m(i, k) = flat[static_cast<std::size_t>(i * cols + k)];
        }
    }
    return m;
}

inline nlohmann::json vector_to_json(const Vector &v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector vector_from_json(const nlohmann::json &j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const HebbianConfig &h) {
    return {{"W", matrix_to_json(h.W)},
            {"gamma", h.gamma},
            {"beta", vector_to_json(h.beta)},
            {"n", h.n},
            {"w_max", h.w_max}};
}

inline HebbianConfig hebbian_from_json(const nlohmann::json &j) {
    HebbianConfig h;
    h.W = matrix_from_json(j.at("W"));
    h.gamma = j.at("gamma").get<double>();
    h.beta = vector_from_json(j.at("beta"));
    h.n = j.at("n").get<std::size_t>();
    h.w_max = j.at("w_max").get<double>();
    return h;
}

inline nlohmann::json to_json(const NeuronParams &p) {
    return {{"alpha", matrix_to_json(p.alpha)}, {"b", vector_to_json(p.b)}, {"trainable", p.trainable}};
}

inline NeuronParams neuron_from_json(const nlohmann::json &j) {
    NeuronParams p;
    p.alpha = matrix_from_json(j.at("alpha"));
    p.b = vector_from_json(j.at("b"));
    p.trainable = j.at("trainable").get<bool>();
    if (p.alpha.rows() != p.b.size() || p.alpha.cols() != p.b.size()) {
        throw IoError("neuron parameter shapes disagree");
    }
    return p;
}

} // namespace qhamrec::qham
