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
 * MovieLens `ratings.dat` ingestion: parsing, the normalized dense
 * user-by-movie matrix, and seeded per-user train/validation/test splits.
 */
#pragma once

#include "common.hpp"
#include "io.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <istream>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace qhamrec::dataset {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kMaxRating = 5.0;

struct RatingRecord {
    std::int64_t user_id = 0;
    std::int64_t movie_id = 0;
    double rating = 0.0;
    std::int64_t timestamp = 0;

    friend bool operator==(const RatingRecord &, const RatingRecord &) = default;
};

/**
 * @brief Dense user-by-movie matrix of ratings scaled to [0,1].
 *
 * Row r belongs to user_ids[r] and column c to movie_ids[c]. Both id lists
 * are sorted ascending, so they double as ordered id -> index maps. A zero
 * entry means "not rated".
 */
struct RatingsMatrix {
    RowMatrix values;
    std::vector<std::int64_t> user_ids;
    std::vector<std::int64_t> movie_ids;

    [[nodiscard]] std::size_t users() const { return user_ids.size(); }
    [[nodiscard]] std::size_t movies() const { return movie_ids.size(); }

    [[nodiscard]] std::size_t row_of(std::int64_t user_id) const {
        auto it = std::lower_bound(user_ids.begin(), user_ids.end(), user_id);
        if (it == user_ids.end() || *it != user_id) {
            throw ArgumentError("unknown user id " + std::to_string(user_id));
        }
        return static_cast<std::size_t>(it - user_ids.begin());
    }
    [[nodiscard]] std::size_t column_of(std::int64_t movie_id) const {
        auto it = std::lower_bound(movie_ids.begin(), movie_ids.end(), movie_id);
        if (it == movie_ids.end() || *it != movie_id) {
            throw ArgumentError("unknown movie id " + std::to_string(movie_id));
        }
        return static_cast<std::size_t>(it - movie_ids.begin());
    }

    /// Copies the given rows (in the given order) into a new matrix that
    /// shares this matrix's column index.
    [[nodiscard]] RatingsMatrix select_rows(std::span<const std::size_t> rows) const {
        RatingsMatrix out;
        out.movie_ids = movie_ids;
        out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
        out.user_ids.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.values.row(static_cast<Eigen::Index>(i)) =
                values.row(static_cast<Eigen::Index>(rows[i]));
            out.user_ids.push_back(user_ids[rows[i]]);
        }
        return out;
    }
};

struct SplitSet {
    RatingsMatrix train;
    RatingsMatrix validation;
    RatingsMatrix test;
    std::uint64_t seed = 0;
    double ratio = 0.33;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char *name) {
    field = trim(field);
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw ParseError(line, std::string("non-numeric ") + name + " '" +
                                   std::string(field) + "'");
    }
    return value;
}

} // namespace detail

/// Parses one `user::movie::rating::timestamp` line. `line_no` is 1-based.
inline RatingRecord parse_rating_line(std::string_view text, std::size_t line_no) {
    std::array<std::string_view, 4> fields{};
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find("::", start);
        if (count == fields.size()) {
            throw ParseError(line_no, "expected 4 '::'-separated fields");
        }
        if (pos == std::string_view::npos) {
            fields[count++] = text.substr(start);
            break;
        }
        fields[count++] = text.substr(start, pos - start);
        start = pos + 2;
    }
    if (count != 4) {
        throw ParseError(line_no, "expected 4 '::'-separated fields, got " +
                                      std::to_string(count));
    }
    RatingRecord rec;
    rec.user_id = detail::parse_number<std::int64_t>(fields[0], line_no, "user id");
    rec.movie_id = detail::parse_number<std::int64_t>(fields[1], line_no, "movie id");
    rec.rating = detail::parse_number<double>(fields[2], line_no, "rating");
    rec.timestamp = detail::parse_number<std::int64_t>(fields[3], line_no, "timestamp");

    if (rec.user_id <= 0 || rec.movie_id <= 0) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": ids must be positive");
    }
    if (!(rec.rating >= 0.0 && rec.rating <= kMaxRating)) {
        throw ValidationError("line " + std::to_string(line_no) + ": rating " +
                              std::string(detail::trim(fields[2])) +
                              " outside [0,5]");
    }
    const double twice = rec.rating * 2.0;
    if (twice != std::round(twice)) {
        throw ValidationError("line " + std::to_string(line_no) + ": rating " +
                              std::string(detail::trim(fields[2])) +
                              " is not a half-step value");
    }
    return rec;
}

inline std::vector<RatingRecord> parse_ratings(std::istream &source) {
    std::vector<RatingRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        auto view = detail::trim(line);
        if (view.empty()) {
            continue;
        }
        out.push_back(parse_rating_line(view, line_no));
    }
    return out;
}

/**
 * @brief Builds the normalized matrix, dropping users with fewer than
 * `min_ratings` distinct rated movies.
 *
 * Columns cover every movie id seen in `records`, including movies whose
 * only raters were filtered out. A repeated (user, movie) pair keeps the
 * last rating.
 */
inline RatingsMatrix build_matrix(std::span<const RatingRecord> records,
                                  std::size_t min_ratings = 20) {
    if (records.empty()) {
        throw EmptyDatasetError("no rating records");
    }
    std::map<std::int64_t, std::map<std::int64_t, double>> by_user;
    std::vector<std::int64_t> movies;
    movies.reserve(records.size());
    for (const auto &r : records) {
        by_user[r.user_id][r.movie_id] = r.rating;
        movies.push_back(r.movie_id);
    }
    std::sort(movies.begin(), movies.end());
    movies.erase(std::unique(movies.begin(), movies.end()), movies.end());

    RatingsMatrix m;
    m.movie_ids = std::move(movies);
    for (const auto &[user, ratings] : by_user) {
        if (ratings.size() >= min_ratings) {
            m.user_ids.push_back(user);
        }
    }
    if (m.user_ids.empty()) {
        throw EmptyDatasetError("every user has fewer than " +
                                std::to_string(min_ratings) + " ratings");
    }
    m.values = RowMatrix::Zero(static_cast<Eigen::Index>(m.user_ids.size()),
                               static_cast<Eigen::Index>(m.movie_ids.size()));
    for (std::size_t row = 0; row < m.user_ids.size(); ++row) {
        for (const auto &[movie, rating] : by_user[m.user_ids[row]]) {
            m.values(static_cast<Eigen::Index>(row),
                     static_cast<Eigen::Index>(m.column_of(movie))) =
                rating / kMaxRating;
        }
    }
    return m;
}

struct SplitSizes {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};

/// Pool = round(ratio*U) users; test = round(ratio*pool), validation the
/// rest of the pool (the larger share).
inline SplitSizes split_sizes(std::size_t users, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ArgumentError("split ratio must lie in (0,1)");
    }
    auto pool = static_cast<std::size_t>(
        round_half_even(ratio * static_cast<double>(users)));
    auto test = static_cast<std::size_t>(
        round_half_even(ratio * static_cast<double>(pool)));
    return {users - pool, pool - test, test};
}

inline SplitSet split(const RatingsMatrix &matrix, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ArgumentError("split ratio must lie in (0,1)");
    }
    if (matrix.users() < 3) {
        throw ArgumentError("split needs at least 3 users");
    }
    const auto sizes = split_sizes(matrix.users(), ratio);

    std::vector<std::size_t> order(matrix.users());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    auto take = [&](std::size_t begin, std::size_t count) {
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                      order.begin() +
                                          static_cast<std::ptrdiff_t>(begin + count));
        std::sort(rows.begin(), rows.end());
        return matrix.select_rows(rows);
    };
    SplitSet out;
    out.seed = seed;
    out.ratio = ratio;
    out.test = take(0, sizes.test);
    out.validation = take(sizes.test, sizes.validation);
    out.train = take(sizes.test + sizes.validation, sizes.train);
    return out;
}

// ---------------------------------------------------------------------------
// Matrix checkpoint: little-endian binary container.
//   magic "QHRMATRX" | u32 version | u64 rows | u64 cols
//   | i64 user_ids[rows] | i64 movie_ids[cols] | f64 values[rows*cols] (row-major)

constexpr std::uint32_t kMatrixFormatVersion = 1;
constexpr std::string_view kMatrixMagic = "QHRMATRX";

namespace detail {
template <typename T> void put(std::string &out, const T &v) {
    const auto *p = reinterpret_cast<const char *>(&v);
    out.append(p, sizeof(T));
}
template <typename T> T get(std::string_view &in) {
    if (in.size() < sizeof(T)) {
        throw IoError("matrix checkpoint truncated");
    }
    T v;
    std::memcpy(&v, in.data(), sizeof(T));
    in.remove_prefix(sizeof(T));
    return v;
}
} // namespace detail

inline std::string serialize_matrix(const RatingsMatrix &m) {
    std::string out;
    out.reserve(32 + 8 * (m.users() + m.movies() + m.users() * m.movies()));
    out.append(kMatrixMagic);
    detail::put(out, kMatrixFormatVersion);
    detail::put(out, static_cast<std::uint64_t>(m.users()));
    detail::put(out, static_cast<std::uint64_t>(m.movies()));
    for (auto id : m.user_ids) {
        detail::put(out, id);
    }
    for (auto id : m.movie_ids) {
        detail::put(out, id);
    }
    out.append(reinterpret_cast<const char *>(m.values.data()),
               static_cast<std::size_t>(m.values.size()) * sizeof(double));
    return out;
}

inline RatingsMatrix deserialize_matrix(std::string_view in) {
    if (in.substr(0, kMatrixMagic.size()) != kMatrixMagic) {
        throw IoError("not a matrix checkpoint (bad magic)");
    }
    in.remove_prefix(kMatrixMagic.size());
    if (auto v = detail::get<std::uint32_t>(in); v != kMatrixFormatVersion) {
        throw IoError("unsupported matrix checkpoint version " + std::to_string(v));
    }
    const auto rows = detail::get<std::uint64_t>(in);
    const auto cols = detail::get<std::uint64_t>(in);
    RatingsMatrix m;
    m.user_ids.resize(rows);
    m.movie_ids.resize(cols);
    for (auto &id : m.user_ids) {
        id = detail::get<std::int64_t>(in);
    }
    for (auto &id : m.movie_ids) {
        id = detail::get<std::int64_t>(in);
    }
    if (in.size() != rows * cols * sizeof(double)) {
        throw IoError("matrix checkpoint payload size mismatch");
    }
    m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(m.values.data(), in.data(), in.size());
    return m;
}

inline void write_matrix(const std::filesystem::path &path, const RatingsMatrix &m) {
    io::write_file_atomic(path, serialize_matrix(m));
}

inline RatingsMatrix read_matrix(const std::filesystem::path &path) {
    return deserialize_matrix(io::read_file(path));
}

/// Split manifest: seed, ratios and user-id membership per split.
inline nlohmann::json split_manifest(const SplitSet &s) {
    return {
        {"format", "qhamrec-splits"},
        {"version", 1},
        {"seed", s.seed},
        {"ratio", s.ratio},
        {"pool_assignment", "larger share -> validation, smaller -> test"},
        {"train", s.train.user_ids},
        {"validation", s.validation.user_ids},
        {"test", s.test.user_ids},
    };
}

/// Rebuilds a SplitSet from the full matrix and a manifest.
inline SplitSet apply_split_manifest(const RatingsMatrix &matrix, const nlohmann::json &j) {
    auto rows_for = [&](const char *key) {
        std::vector<std::size_t> rows;
        for (auto id : j.at(key).get<std::vector<std::int64_t>>()) {
            rows.push_back(matrix.row_of(id));
        }
        return matrix.select_rows(rows);
    };
    SplitSet s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.ratio = j.at("ratio").get<double>();
    s.train = rows_for("train");
    s.validation = rows_for("validation");
    s.test = rows_for("test");
    return s;
}

} // namespace qhamrec::dataset
