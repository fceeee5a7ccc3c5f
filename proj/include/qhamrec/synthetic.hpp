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
 * Synthetic ratings in the "user::movie::rating::timestamp" format, with a
 * planted taste-group structure. Used by tests and the demo when the real
 * MovieLens file is not around.
 */
#pragma once

#include "common.hpp"
#include "dataset.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace qhamrec::synthetic {

struct SyntheticConfig {
    std::size_t users = 400;
    std::size_t movies = 300;
    std::size_t groups = 4;
    std::size_t min_rated = 25;
    std::size_t max_rated = 60;
    double in_group_share = 0.75; // fraction of a user's ratings inside their block
    std::uint64_t seed = 7;
    std::size_t sparse_users = 0; // extra users with fewer than 20 ratings
};

struct SyntheticData {
    std::vector<dataset::RatingRecord> records;
    std::vector<int> group_of_user; // by user id - 1
};

inline double to_half_step(double v) {
    return std::clamp(std::round(v * 2.0) / 2.0, 0.5, 5.0);
}

/**
 * @brief Movies are split into `groups` contiguous blocks; a user of group g
 * rates mostly movies from block g, high, and a few others, low.
 */
inline SyntheticData generate(const SyntheticConfig &cfg) {
    if (cfg.groups == 0 || cfg.movies < cfg.groups || cfg.max_rated < cfg.min_rated ||
        cfg.max_rated > cfg.movies) {
        throw ArgumentError("invalid synthetic config");
    }
    Rng rng(cfg.seed);
    const std::size_t block = cfg.movies / cfg.groups;
    std::uniform_int_distribution<std::size_t> count_dist(cfg.min_rated, cfg.max_rated);
    std::uniform_int_distribution<std::size_t> group_dist(0, cfg.groups - 1);
    std::normal_distribution<double> jitter(0.0, 0.5);
    std::uniform_int_distribution<std::int64_t> ts(956703932, 1046454590);

    SyntheticData out;
    const std::size_t total_users = cfg.users + cfg.sparse_users;
    for (std::size_t u = 0; u < total_users; ++u) {
        const std::size_t g = group_dist(rng);
        out.group_of_user.push_back(static_cast<int>(g));
        const std::size_t wanted = u < cfg.users ? count_dist(rng) : 5 + (u % 10);
        const auto in_count = std::min(
            block, static_cast<std::size_t>(std::round(cfg.in_group_share * static_cast<double>(wanted))));
        std::vector<std::size_t> inside(block);
        std::iota(inside.begin(), inside.end(), g * block);
        std::vector<std::size_t> outside;
        for (std::size_t m = 0; m < cfg.movies; ++m) {
            if (m < g * block || m >= (g + 1) * block) {
                outside.push_back(m);
            }
        }
        std::vector<std::size_t> chosen;
        std::sample(inside.begin(), inside.end(), std::back_inserter(chosen), in_count, rng);
        std::sample(outside.begin(), outside.end(), std::back_inserter(chosen),
                    std::min(outside.size(), wanted - in_count), rng);
        for (auto m : chosen) {
            const bool liked = m >= g * block && m < (g + 1) * block;
            dataset::RatingRecord r;
            r.user_id = static_cast<std::int64_t>(u + 1);
            r.movie_id = static_cast<std::int64_t>(m + 1);
            r.rating = to_half_step((liked ? 4.4 : 1.8) + jitter(rng));
            r.timestamp = ts(rng);
            out.records.push_back(r);
        }
    }
    return out;
}

inline std::string to_text(const std::vector<dataset::RatingRecord> &records) {
    std::ostringstream s;
    for (const auto &r : records) {
        s << r.user_id << "::" << r.movie_id << "::";
        if (r.rating == std::floor(r.rating)) {
            s << static_cast<int>(r.rating);
        } else {
            s << r.rating;
        }
        s << "::" << r.timestamp << "\n";
    }
    return s.str();
}

} // namespace qhamrec::synthetic
