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
 * Run configuration: one INI file with sections, overridable key by key.
 *
 *     [data]       ratings, min_ratings, split_ratio
 *     [model]      latent, clusters
 *     [autoencoder] epochs, batch_size, lr, mask_unrated
 *     [kmeans]     max_iter, tol
 *     [hybrid]     epochs, batch_size, lr, fine_tune_encoder, train_quantum
 *     [backend]    kind (ideal|noisy), engine (branches|density), shots
 *     [seeds]      split, init, kmeans, target, noise
 */
#pragma once

#include "common.hpp"
#include "qham.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace qhamrec::config {

struct Seeds {
    std::uint64_t split = 0;
    std::uint64_t init = 0;
    std::uint64_t kmeans = 0;
    std::uint64_t target = 0;
    std::uint64_t noise = 0;
};

struct RunConfig {
    std::filesystem::path ratings;
    std::size_t min_ratings = 20;
    double split_ratio = 0.33;

    std::size_t latent = 8;
    std::size_t clusters = 4;

    int ae_epochs = 35;
    std::size_t ae_batch = 64;
    double ae_lr = 1e-3;
    bool ae_mask_unrated = false;

    int kmeans_max_iter = 300;
    double kmeans_tol = 1e-6;

    int hybrid_epochs = 35;
    std::size_t hybrid_batch = 64;
    double hybrid_lr = 1e-2;
    bool fine_tune_encoder = false;
    bool train_quantum = true;

    qham::Backend backend = qham::Backend::ideal;
    qham::NoisyEngine engine = qham::NoisyEngine::branches;
    std::size_t shots = 0;

    Seeds seeds;
};

/// Every recognized key with its default, as written back into manifests.
inline std::map<std::string, std::string> to_map(const RunConfig &c) {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    auto d = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    return {
        {"data.ratings", c.ratings.string()},
        {"data.min_ratings", std::to_string(c.min_ratings)},
        {"data.split_ratio", d(c.split_ratio)},
        {"model.latent", std::to_string(c.latent)},
        {"model.clusters", std::to_string(c.clusters)},
        {"autoencoder.epochs", std::to_string(c.ae_epochs)},
        {"autoencoder.batch_size", std::to_string(c.ae_batch)},
        {"autoencoder.lr", d(c.ae_lr)},
        {"autoencoder.mask_unrated", b(c.ae_mask_unrated)},
        {"kmeans.max_iter", std::to_string(c.kmeans_max_iter)},
        {"kmeans.tol", d(c.kmeans_tol)},
        {"hybrid.epochs", std::to_string(c.hybrid_epochs)},
        {"hybrid.batch_size", std::to_string(c.hybrid_batch)},
        {"hybrid.lr", d(c.hybrid_lr)},
        {"hybrid.fine_tune_encoder", b(c.fine_tune_encoder)},
        {"hybrid.train_quantum", b(c.train_quantum)},
        {"backend.kind", qham::to_string(c.backend)},
        {"backend.engine", qham::to_string(c.engine)},
        {"backend.shots", std::to_string(c.shots)},
        {"seeds.split", std::to_string(c.seeds.split)},
        {"seeds.init", std::to_string(c.seeds.init)},
        {"seeds.kmeans", std::to_string(c.seeds.kmeans)},
        {"seeds.target", std::to_string(c.seeds.target)},
        {"seeds.noise", std::to_string(c.seeds.noise)},
    };
}

namespace detail {

template <typename T> T parse_value(const std::string &key, const std::string &text) {
    T value{};
    std::istringstream in(text);
    if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1" || text == "yes") {
            return true;
        }
        if (text == "false" || text == "0" || text == "no") {
            return false;
        }
        throw ConfigurationError("config key " + key + ": expected a boolean, got '" + text + "'");
    } else {
        if constexpr (std::is_unsigned_v<T>) {
            if (!text.empty() && text.front() == '-') {
                throw ConfigurationError("config key " + key + " must be non-negative");
            }
        }
        in >> value;
        if (in.fail() || !(in >> std::ws).eof()) {
            throw ConfigurationError("config key " + key + ": cannot parse '" + text + "'");
        }
    }
    return value;
}

} // namespace detail

/// Builds a RunConfig from flat "section.key" entries; unknown keys are errors.
inline RunConfig from_map(const std::map<std::string, std::string> &kv) {
    RunConfig c;
    const auto known = to_map(c);
    for (const auto &[key, value] : kv) {
        if (!known.contains(key)) {
            throw ConfigurationError("unknown config key '" + key + "'");
        }
    }
    auto get = [&](const std::string &key, auto &field) {
        auto it = kv.find(key);
        if (it != kv.end()) {
            field = detail::parse_value<std::decay_t<decltype(field)>>(key, it->second);
        }
    };
    if (auto it = kv.find("data.ratings"); it != kv.end()) {
        c.ratings = it->second;
    }
    get("data.min_ratings", c.min_ratings);
    get("data.split_ratio", c.split_ratio);
    get("model.latent", c.latent);
    get("model.clusters", c.clusters);
    get("autoencoder.epochs", c.ae_epochs);
    get("autoencoder.batch_size", c.ae_batch);
    get("autoencoder.lr", c.ae_lr);
    get("autoencoder.mask_unrated", c.ae_mask_unrated);
    get("kmeans.max_iter", c.kmeans_max_iter);
    get("kmeans.tol", c.kmeans_tol);
    get("hybrid.epochs", c.hybrid_epochs);
    get("hybrid.batch_size", c.hybrid_batch);
    get("hybrid.lr", c.hybrid_lr);
    get("hybrid.fine_tune_encoder", c.fine_tune_encoder);
    get("hybrid.train_quantum", c.train_quantum);
    if (auto it = kv.find("backend.kind"); it != kv.end()) {
        c.backend = qham::backend_from_string(it->second);
    }
    if (auto it = kv.find("backend.engine"); it != kv.end()) {
        c.engine = qham::engine_from_string(it->second);
    }
    get("backend.shots", c.shots);
    get("seeds.split", c.seeds.split);
    get("seeds.init", c.seeds.init);
    get("seeds.kmeans", c.seeds.kmeans);
    get("seeds.target", c.seeds.target);
    get("seeds.noise", c.seeds.noise);

    if (c.latent < 1 || c.clusters < 1) {
        throw ConfigurationError("model.latent and model.clusters must be at least 1");
    }
    if (c.ae_epochs < 0 || c.hybrid_epochs < 0 || c.ae_batch < 1 || c.hybrid_batch < 1) {
        throw ConfigurationError("epochs must be >= 0 and batch sizes >= 1");
    }
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) {
        throw ConfigurationError("data.split_ratio must lie in (0, 1)");
    }
    return c;
}

/// Flattens an INI file into "section.key" entries.
inline std::map<std::string, std::string> read_ini(const std::filesystem::path &path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error &e) {
        throw ConfigurationError("config " + path.string() + ": " + e.message() + " (line " +
                                 std::to_string(e.line()) + ")");
    }
    std::map<std::string, std::string> kv;
    for (const auto &[section, body] : tree) {
        if (body.empty()) {
            throw ConfigurationError("config " + path.string() + ": key '" + section +
                                     "' lies outside any section");
        }
        for (const auto &[key, value] : body) {
            kv[section + "." + key] = value.data();
        }
    }
    return kv;
}

/// "section.key=value"
inline void apply_override(std::map<std::string, std::string> &kv, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigurationError("override '" + assignment + "' is not of the form key=value");
    }
    kv[assignment.substr(0, eq)] = assignment.substr(eq + 1);
}

inline nlohmann::json to_json(const RunConfig &c) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[k, v] : to_map(c)) {
        j[k] = v;
    }
    return j;
}

} // namespace qhamrec::config
