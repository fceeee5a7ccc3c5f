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
 * User archetypes: k-means over raw normalized rating vectors, then each
 * centroid is encoded and polarized into a {-1,+1}^n pattern.
 */
#pragma once

#include "common.hpp"
#include "dataset.hpp"
#include "io.hpp"
#include "nn.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace qhamrec::archetypes {

struct KMeansConfig {
    std::size_t k = 4;
    std::uint64_t seed = 0;
    int max_iter = 300;
    double tol = 1e-6;
};

struct ClusterModel {
    std::size_t k = 0;
    Eigen::MatrixXd centroids;        // k x M
    std::vector<int> labels;          // one per matrix row
    std::vector<double> inertia_history; // after every assignment step
    int iterations = 0;
    int reseeds = 0;

    [[nodiscard]] double inertia() const {
        return inertia_history.empty() ? 0.0 : inertia_history.back();
    }
};

using Pattern = std::vector<int>;

struct PolarPattern {
    Pattern bits;
    int source_cluster = 0;
};

struct PatternSet {
    std::vector<PolarPattern> patterns;
    std::size_t n = 0;

    [[nodiscard]] std::size_t size() const { return patterns.size(); }
};

namespace detail {

// Rows in ascending user-id order make the clustering independent of how
// the matrix rows happen to be stored.
inline std::vector<Eigen::Index> canonical_order(const dataset::RatingsMatrix &m) {
    std::vector<Eigen::Index> order(m.users());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return m.user_ids[static_cast<std::size_t>(a)] < m.user_ids[static_cast<std::size_t>(b)];
    });
    return order;
}

inline double sq_dist(const auto &a, const auto &b) { return (a - b).squaredNorm(); }

} // namespace detail

/**
 * @brief Lloyd's algorithm with k-means++ seeding (Euclidean distance).
 *
 * Stops when the largest centroid move is below `tol` or after `max_iter`
 * iterations. An empty cluster is reseeded with the point farthest from its
 * current centroid.
 */
inline ClusterModel kmeans(const dataset::RatingsMatrix &matrix, const KMeansConfig &cfg) {
    const auto &x = matrix.values;
    const auto U = x.rows();
    const auto k = static_cast<Eigen::Index>(cfg.k);
    if (cfg.k == 0 || k > U) {
        throw ArgumentError("kmeans: need 1 <= k <= number of users");
    }
    const auto order = detail::canonical_order(matrix);
    Rng rng(cfg.seed);

    ClusterModel model;
    model.k = cfg.k;
    model.centroids.resize(k, x.cols());

    // k-means++ seeding
    std::vector<double> d2(static_cast<std::size_t>(U), std::numeric_limits<double>::infinity());
    {
        std::uniform_int_distribution<Eigen::Index> first(0, U - 1);
        model.centroids.row(0) = x.row(order[static_cast<std::size_t>(first(rng))]);
    }
    for (Eigen::Index c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            d2[i] = std::min(d2[i], detail::sq_dist(x.row(order[i]), model.centroids.row(c - 1)));
            total += d2[i];
        }
        std::size_t pick = order.size() - 1;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            const double r = u(rng);
            double acc = 0.0;
            for (std::size_t i = 0; i < order.size(); ++i) {
                acc += d2[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            std::uniform_int_distribution<std::size_t> any(0, order.size() - 1);
            pick = any(rng);
        }
        model.centroids.row(c) = x.row(order[pick]);
    }

    model.labels.assign(static_cast<std::size_t>(U), 0);
    std::vector<double> point_d2(static_cast<std::size_t>(U), 0.0);
    auto assign = [&] {
        double inertia = 0.0;
        for (auto r : order) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (Eigen::Index c = 0; c < k; ++c) {
                const double d = detail::sq_dist(x.row(r), model.centroids.row(c));
                if (d < best) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            model.labels[static_cast<std::size_t>(r)] = best_c;
            point_d2[static_cast<std::size_t>(r)] = best;
            inertia += best;
        }
        model.inertia_history.push_back(inertia);
    };

    assign();
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (auto r : order) {
            const auto c = model.labels[static_cast<std::size_t>(r)];
            sums.row(c) += x.row(r);
            ++counts[static_cast<std::size_t>(c)];
        }
        double shift = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) {
            Eigen::RowVectorXd next;
            if (counts[static_cast<std::size_t>(c)] == 0) {
                // farthest point from its own centroid
                std::size_t far = 0;
                for (std::size_t i = 1; i < order.size(); ++i) {
                    if (point_d2[static_cast<std::size_t>(order[i])] >
                        point_d2[static_cast<std::size_t>(order[far])]) {
                        far = i;
                    }
                }
                next = x.row(order[far]);
                point_d2[static_cast<std::size_t>(order[far])] = 0.0;
                ++model.reseeds;
                std::clog << "kmeans: cluster " << c << " empty at iteration " << iter
                          << ", reseeded to user " << matrix.user_ids[static_cast<std::size_t>(order[far])]
                          << "\n";
            } else {
                next = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
            shift = std::max(shift, std::sqrt(detail::sq_dist(next, model.centroids.row(c))));
            model.centroids.row(c) = next;
        }
        model.iterations = iter + 1;
        assign();
        if (shift < cfg.tol) {
            break;
        }
    }
    return model;
}

/// +1 where latent >= 0, else -1.
inline Pattern polarize(const nn::Vector &latent) {
    Pattern bits(static_cast<std::size_t>(latent.size()));
    for (Eigen::Index i = 0; i < latent.size(); ++i) {
        if (!std::isfinite(latent(i))) {
            throw ArgumentError("polarize: non-finite latent entry");
        }
        bits[static_cast<std::size_t>(i)] = latent(i) >= 0.0 ? 1 : -1;
    }
    return bits;
}

inline std::string pattern_string(const Pattern &p) {
    std::string s;
    for (int b : p) {
        s.push_back(b > 0 ? '+' : '-');
    }
    return s;
}

struct ArchetypeResult {
    PatternSet patterns;
    ClusterModel clusters; // relabeled to match pattern order
    std::vector<int> labels;
};

/**
 * @brief Clusters raw rating vectors, encodes and polarizes each centroid.
 *
 * Clusters are renumbered so that their patterns are in lexicographic order
 * (-1 before +1); pattern i comes from cluster i.
 */
inline ArchetypeResult extract_archetypes(const dataset::RatingsMatrix &matrix,
                                          const nn::EncoderParams &encoder,
                                          const KMeansConfig &cfg) {
    auto model = kmeans(matrix, cfg);
    const auto k = static_cast<std::size_t>(model.k);

    std::vector<Pattern> raw(k);
    for (std::size_t c = 0; c < k; ++c) {
        nn::Vector centroid = model.centroids.row(static_cast<Eigen::Index>(c)).transpose();
        raw[c] = polarize(nn::encode(encoder, centroid));
    }
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
    for (std::size_t i = 1; i < k; ++i) {
        if (raw[perm[i]] == raw[perm[i - 1]]) {
            throw PatternCollisionError(
                "clusters " + std::to_string(perm[i - 1]) + " and " + std::to_string(perm[i]) +
                " polarize to the same pattern " + pattern_string(raw[perm[i]]) +
                "; retry with a different latent size or k-means seed");
        }
    }
    std::vector<int> new_label(k);
    ArchetypeResult out;
    out.patterns.n = static_cast<std::size_t>(encoder.latent_dim());
    out.clusters = model;
    for (std::size_t i = 0; i < k; ++i) {
        new_label[perm[i]] = static_cast<int>(i);
        out.patterns.patterns.push_back({raw[perm[i]], static_cast<int>(i)});
        out.clusters.centroids.row(static_cast<Eigen::Index>(i)) =
            model.centroids.row(static_cast<Eigen::Index>(perm[i]));
    }
    for (auto &l : out.clusters.labels) {
        l = new_label[static_cast<std::size_t>(l)];
    }
    out.labels = out.clusters.labels;
    return out;
}

inline std::string centroid_checksum(const Eigen::MatrixXd &centroids, Eigen::Index row) {
    Eigen::RowVectorXd r = centroids.row(row);
    return io::sha256_hex(
        {reinterpret_cast<const char *>(r.data()), static_cast<std::size_t>(r.size()) * sizeof(double)});
}

inline nlohmann::json archetypes_to_json(const ArchetypeResult &a) {
    nlohmann::json patterns = nlohmann::json::array();
    nlohmann::json sums = nlohmann::json::array();
    for (std::size_t i = 0; i < a.patterns.size(); ++i) {
        patterns.push_back(a.patterns.patterns[i].bits);
        sums.push_back(centroid_checksum(a.clusters.centroids, static_cast<Eigen::Index>(i)));
    }
    return {{"format", "qhamrec-archetypes"},
            {"version", 1},
            {"k", a.patterns.size()},
            {"n", a.patterns.n},
            {"patterns", patterns},
            {"centroid_sha256", sums},
            {"kmeans_iterations", a.clusters.iterations},
            {"kmeans_inertia", a.clusters.inertia()},
            {"kmeans_reseeds", a.clusters.reseeds}};
}

inline PatternSet patterns_from_json(const nlohmann::json &j) {
    if (j.value("format", "") != "qhamrec-archetypes") {
        throw IoError("not a qhamrec archetype artifact");
    }
    PatternSet set;
    set.n = j.at("n").get<std::size_t>();
    int idx = 0;
    for (const auto &p : j.at("patterns")) {
        set.patterns.push_back({p.get<Pattern>(), idx++});
        if (set.patterns.back().bits.size() != set.n) {
            throw IoError("archetype pattern length mismatch");
        }
    }
    return set;
}

inline std::string labels_csv(const dataset::RatingsMatrix &matrix, const std::vector<int> &labels) {
    std::string out = "user_id,cluster\n";
    for (std::size_t r = 0; r < matrix.users(); ++r) {
        out += std::to_string(matrix.user_ids[r]) + "," + std::to_string(labels[r]) + "\n";
    }
    return out;
}

} // namespace qhamrec::archetypes
