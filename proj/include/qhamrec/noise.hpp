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
 * Hardware-like noise: bit-flip channels after a few randomly chosen gates
 * and symmetric readout confusion on a few randomly chosen measurements.
 */
#pragma once

#include "common.hpp"
#include "qsim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <iterator>
#include <numeric>
#include <vector>

namespace qhamrec::noise {

constexpr std::size_t kGateSites = 6;
constexpr std::size_t kReadoutSites = 6;
constexpr double kGateFlipMin = 0.001;
constexpr double kGateFlipMax = 0.01;
constexpr double kReadoutMin = 0.01;
constexpr double kReadoutMax = 0.07;

struct GateSite {
    std::size_t gate_index = 0;
    double probability = 0.0;
    friend bool operator==(const GateSite &, const GateSite &) = default;
};

struct ReadoutSite {
    std::size_t qubit = 0;
    double probability = 0.0;
    friend bool operator==(const ReadoutSite &, const ReadoutSite &) = default;
};

/// Sites are kept sorted by gate index / qubit.
struct NoiseSpec {
    std::vector<GateSite> gate_sites;
    std::vector<ReadoutSite> readout_sites;
    std::uint64_t seed = 0;
    std::size_t circuit_len = 0;

    [[nodiscard]] bool empty() const { return gate_sites.empty() && readout_sites.empty(); }
    friend bool operator==(const NoiseSpec &, const NoiseSpec &) = default;
};

/**
 * @brief Draws min(6, circuit_len) distinct gate sites with flip probability
 * U[0.001, 0.01] and min(6, n_measurements) distinct measured qubits with
 * readout error U[0.01, 0.07].
 */
inline NoiseSpec sample_noise_spec(std::size_t circuit_len, std::size_t n_measurements,
                                   std::uint64_t seed) {
    if (circuit_len < 1) {
        throw ArgumentError("noise spec needs a circuit with at least one gate");
    }
    Rng rng(seed);
    NoiseSpec spec;
    spec.seed = seed;
    spec.circuit_len = circuit_len;

    auto draw_indices = [&](std::size_t population, std::size_t wanted) {
        std::vector<std::size_t> all(population);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::vector<std::size_t> picked;
        std::sample(all.begin(), all.end(), std::back_inserter(picked),
                    std::min(wanted, population), rng);
        return picked; // std::sample keeps population order
    };

    std::uniform_real_distribution<double> gate_p(kGateFlipMin, kGateFlipMax);
    for (auto idx : draw_indices(circuit_len, kGateSites)) {
        spec.gate_sites.push_back({idx, gate_p(rng)});
    }
    std::uniform_real_distribution<double> readout_p(kReadoutMin, kReadoutMax);
    for (auto q : draw_indices(n_measurements, kReadoutSites)) {
        spec.readout_sites.push_back({q, readout_p(rng)});
    }
    return spec;
}

inline void check_binding(const NoiseSpec &spec, std::size_t circuit_len) {
    for (const auto &s : spec.gate_sites) {
        if (s.gate_index >= circuit_len) {
            throw BindingError("noise site at gate " + std::to_string(s.gate_index) +
                               " but the circuit has " + std::to_string(circuit_len) +
                               " gates");
        }
        qsim::check_probability(s.probability, "bit-flip probability");
    }
}

/// Density-matrix evolution: each gate, then its bit-flip if it is a site.
inline qsim::DensityMatrix apply_noisy_circuit(qsim::DensityMatrix rho,
                                               const std::vector<qsim::GateOp> &ops,
                                               const NoiseSpec &spec) {
    check_binding(spec, ops.size());
    for (std::size_t i = 0; i < ops.size(); ++i) {
        qsim::apply_gate(rho, ops[i]);
        for (const auto &site : spec.gate_sites) {
            if (site.gate_index == i) {
                qsim::apply_bitflip(rho, ops[i].target, site.probability);
            }
        }
    }
    return rho;
}

namespace detail {

// The noisy circuit as a flat event list: gates interleaved with the
// bit-flip channels that follow them.
struct Event {
    qsim::GateOp op;
    double flip_probability = -1.0; // < 0 marks a gate, otherwise a channel
};

struct BranchWalker {
    std::vector<Event> events;
    std::size_t measured = 0;
    std::vector<double> z;

    void run(qsim::StateVector state, std::size_t from, double weight) {
        for (std::size_t e = from; e < events.size(); ++e) {
            const auto &ev = events[e];
            if (ev.flip_probability < 0.0) {
                qsim::apply_gate(state, ev.op);
                continue;
            }
            if (ev.flip_probability == 0.0) {
                continue;
            }
            qsim::StateVector flipped = state;
            qsim::apply_gate(flipped, ev.op);
            run(std::move(flipped), e + 1, weight * ev.flip_probability);
            weight *= (1.0 - ev.flip_probability);
            if (weight == 0.0) {
                return;
            }
        }
        for (std::size_t q = 0; q < measured; ++q) {
            z[q] += weight * qsim::expectation_z(state, q);
        }
    }
};

} // namespace detail

/**
 * @brief <Z> of qubits [0, measured) after the noisy circuit, by exact
 * enumeration of bit-flip branches.
 *
 * A bit-flip channel is the mixture (1-p) I . I + p X . X, so for a pure
 * input the output density matrix is the probability-weighted sum of the
 * 2^sites pure branches. Equal to the density-matrix route, without the
 * 4^q storage.
 */
inline std::vector<double> branch_expectations(const qsim::StateVector &initial,
                                               const std::vector<qsim::GateOp> &ops,
                                               const NoiseSpec &spec, std::size_t measured) {
    check_binding(spec, ops.size());
    if (measured > initial.qubits()) {
        throw ArgumentError("more measured qubits than the register holds");
    }
    detail::BranchWalker walker;
    walker.measured = measured;
    walker.z.assign(measured, 0.0);
    for (std::size_t i = 0; i < ops.size(); ++i) {
        walker.events.push_back({ops[i]});
        for (const auto &site : spec.gate_sites) {
            if (site.gate_index == i) {
                walker.events.push_back({qsim::GateOp::x(ops[i].target), site.probability});
            }
        }
    }
    walker.run(initial, 0, 1.0);
    return walker.z;
}

/// Symmetric confusion with the site probability on each listed qubit.
inline std::vector<double> apply_readout_sites(std::vector<double> z_values,
                                               const NoiseSpec &spec) {
    for (const auto &s : spec.readout_sites) {
        if (s.qubit >= z_values.size()) {
            throw BindingError("readout site on qubit " + std::to_string(s.qubit) +
                               " but only " + std::to_string(z_values.size()) +
                               " qubits are measured");
        }
        auto probs = qsim::OutcomeProbs::from_z(z_values[s.qubit]);
        z_values[s.qubit] =
            qsim::apply_readout_error(probs, s.probability, s.probability).z();
    }
    return z_values;
}

inline nlohmann::json to_json(const NoiseSpec &spec) {
    nlohmann::json gates = nlohmann::json::array();
    for (const auto &s : spec.gate_sites) {
        gates.push_back({{"gate_index", s.gate_index}, {"probability", s.probability}});
    }
    nlohmann::json reads = nlohmann::json::array();
    for (const auto &s : spec.readout_sites) {
        reads.push_back({{"qubit", s.qubit}, {"probability", s.probability}});
    }
    return {{"seed", spec.seed},
            {"circuit_len", spec.circuit_len},
            {"gate_sites", gates},
            {"readout_sites", reads}};
}

inline NoiseSpec from_json(const nlohmann::json &j) {
    NoiseSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.circuit_len = j.at("circuit_len").get<std::size_t>();
    for (const auto &s : j.at("gate_sites")) {
        spec.gate_sites.push_back(
            {s.at("gate_index").get<std::size_t>(), s.at("probability").get<double>()});
    }
    for (const auto &s : j.at("readout_sites")) {
        spec.readout_sites.push_back(
            {s.at("qubit").get<std::size_t>(), s.at("probability").get<double>()});
    }
    return spec;
}

} // namespace qhamrec::noise
