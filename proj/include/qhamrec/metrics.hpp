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
 * Classification metrics: confusion counts, accuracy, macro-F1 and macro
 * one-vs-rest ROC-AUC computed from the Mann-Whitney rank statistic.
 */
#pragma once

#include "common.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace qhamrec::metrics {

/// counts[true][predicted]
using Confusion = std::vector<std::vector<long>>;

inline Confusion confusion(std::span<const int> truth, std::span<const int> predicted,
                           std::size_t k) {
    if (truth.size() != predicted.size()) {
        throw ArgumentError("confusion: label vectors differ in length");
    }
    Confusion c(k, std::vector<long>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= k ||
            static_cast<std::size_t>(predicted[i]) >= k) {
            throw ArgumentError("confusion: label out of range");
        }
        ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return c;
}

inline long total(const Confusion &c) {
    long t = 0;
    for (const auto &row : c) {
        t = std::accumulate(row.begin(), row.end(), t);
    }
    return t;
}

inline double accuracy(const Confusion &c) {
    const long t = total(c);
    if (t == 0) {
        throw ArgumentError("accuracy of an empty sample");
    }
    long hit = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        hit += c[i][i];
    }
    return static_cast<double>(hit) / static_cast<double>(t);
}

struct F1Result {
    double macro = 0.0;
    std::vector<double> per_class;
    std::vector<int> absent_classes; // zero support, F1 defined as 0
};

/// Per-class F1 = 2 tp / (2 tp + fp + fn), averaged uniformly over classes.
inline F1Result macro_f1(const Confusion &c) {
    const std::size_t k = c.size();
    F1Result r;
    r.per_class.assign(k, 0.0);
    for (std::size_t cls = 0; cls < k; ++cls) {
        const long tp = c[cls][cls];
        long support = 0;
        long predicted = 0;
        for (std::size_t o = 0; o < k; ++o) {
            support += c[cls][o];
            predicted += c[o][cls];
        }
        if (support == 0) {
            r.absent_classes.push_back(static_cast<int>(cls));
        }
        const long denom = support + predicted; // = 2tp + fp + fn
        r.per_class[cls] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    r.macro = k == 0 ? 0.0
                     : std::accumulate(r.per_class.begin(), r.per_class.end(), 0.0) /
                           static_cast<double>(k);
    return r;
}

/**
 * @brief AUC = (R+ - n+(n+ + 1)/2) / (n+ n-), R+ the rank sum of positives
 * with ties sharing their average rank.
 */
inline double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
    if (scores.size() != positive.size()) {
        throw ArgumentError("binary_auc: length mismatch");
    }
    for (double v : scores) {
        if (!std::isfinite(v)) {
            throw NumericError("binary_auc: non-finite score");
        }
    }
    const std::size_t N = scores.size();
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < N;) {
        std::size_t j = i;
        while (j < N && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks i+1..j
        for (std::size_t t = i; t < j; ++t) {
            if (positive[order[t]] != 0) {
                rank_sum += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = N - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw ArgumentError("binary_auc needs both positive and negative samples");
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct AucResult {
    double macro = 0.0;
    std::vector<double> per_class;
    std::vector<int> skipped_classes; // absent from the labels
};

/// Macro one-vs-rest over the classes that occur in `labels`.
inline AucResult roc_auc_ovr(const std::vector<std::vector<double>> &scores,
                             std::span<const int> labels, std::size_t k) {
    if (scores.size() != labels.size()) {
        throw ArgumentError("roc_auc: score and label counts differ");
    }
    std::vector<long> support(k, 0);
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= k) {
            throw ArgumentError("roc_auc: label out of range");
        }
        ++support[static_cast<std::size_t>(l)];
    }
    const auto present = std::count_if(support.begin(), support.end(), [](long s) { return s > 0; });
    if (present < 2) {
        throw ArgumentError("roc_auc is undefined with fewer than two classes present");
    }
    AucResult r;
    r.per_class.assign(k, 0.0);
    std::vector<double> col(scores.size());
    std::vector<std::uint8_t> pos_vec(scores.size());
    double sum = 0.0;
    for (std::size_t cls = 0; cls < k; ++cls) {
        if (support[cls] == 0) {
            r.skipped_classes.push_back(static_cast<int>(cls));
            continue;
        }
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i].size() != k) {
                throw ArgumentError("roc_auc: score vector length != k");
            }
            col[i] = scores[i][cls];
            pos_vec[i] = labels[i] == static_cast<int>(cls) ? 1 : 0;
        }
        r.per_class[cls] = binary_auc(col, pos_vec);
        sum += r.per_class[cls];
    }
    r.macro = sum / static_cast<double>(present);
    return r;
}

inline int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace qhamrec::metrics
