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
// Small synthetic worlds shared by the hybrid, pipeline and acceptance tests.
#pragma once

#include "qhamrec/archetypes.hpp"
#include "qhamrec/dataset.hpp"
#include "qhamrec/hybrid.hpp"
#include "qhamrec/synthetic.hpp"

namespace qhamrec::fixtures {

inline dataset::RatingsMatrix grouped_matrix(std::size_t users, std::uint64_t seed,
                                             std::size_t movies = 200) {
    synthetic::SyntheticConfig sc;
    sc.users = users;
    sc.movies = movies;
    sc.seed = seed;
    return dataset::build_matrix(synthetic::generate(sc).records);
}

// latent_i = tanh(2 (block sum i - mean block sum)); block i = movies of group i.
inline nn::EncoderParams block_encoder(Eigen::Index movies, Eigen::Index blocks) {
    nn::EncoderParams enc{nn::DenseLayer::zeros(movies, blocks, nn::Activation::identity),
                          nn::DenseLayer::zeros(blocks, blocks, nn::Activation::tanh)};
    const auto width = movies / blocks;
    for (Eigen::Index b = 0; b < blocks; ++b) {
        for (Eigen::Index c = b * width; c < (b + 1) * width; ++c) {
            enc.layer1.weights(b, c) = 1.0;
        }
    }
    enc.layer2.weights = Eigen::MatrixXd::Identity(blocks, blocks) * 2.0 -
                         Eigen::MatrixXd::Constant(blocks, blocks, 2.0 / static_cast<double>(blocks));
    return enc;
}

struct World {
    dataset::RatingsMatrix matrix;
    dataset::SplitSet splits;
    nn::EncoderParams encoder;
    archetypes::ArchetypeResult archetypes;
    std::map<std::int64_t, int> labels;
};

inline World small_world(std::size_t users = 300, std::uint64_t seed = 5) {
    World w;
    w.matrix = grouped_matrix(users, seed);
    w.splits = dataset::split(w.matrix, 0.33, seed);
    w.encoder = block_encoder(static_cast<Eigen::Index>(w.matrix.movies()), 4);
    w.archetypes = archetypes::extract_archetypes(w.matrix, w.encoder, {4, seed, 300, 1e-9});
    w.labels = hybrid::label_map(w.matrix, w.archetypes.labels);
    return w;
}

} // namespace qhamrec::fixtures
