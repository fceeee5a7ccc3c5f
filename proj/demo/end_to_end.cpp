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

// In-memory walk through the whole pipeline on synthetic ratings: matrix,
// splits, autoencoder, archetypes, hybrid training, then ideal and noisy
// evaluation of the same model.

#include "qhamrec/archetypes.hpp"
#include "qhamrec/dataset.hpp"
#include "qhamrec/hybrid.hpp"
#include "qhamrec/noise.hpp"
#include "qhamrec/synthetic.hpp"

#include <cstdio>

using namespace qhamrec;

int main() {
    synthetic::SyntheticConfig sc;
    sc.users = 2000;
    sc.movies = 400;
    const auto data = synthetic::generate(sc);
    const auto matrix = dataset::build_matrix(data.records);
    const auto splits = dataset::split(matrix, 0.33, 1);
    std::printf("users=%zu movies=%zu train=%zu validation=%zu test=%zu\n", matrix.users(),
                matrix.movies(), splits.train.users(), splits.validation.users(),
                splits.test.users());

    nn::AutoencoderConfig ac;
    ac.epochs = 35;
    ac.seed = 2;
    auto [ae, ae_hist] = nn::train_autoencoder(splits, ac);
    std::printf("autoencoder test mse=%.5f\n", ae_hist.test_loss);

    const nn::EncoderParams encoder{ae.net.layers[0], ae.net.layers[1]};
    const auto arch = archetypes::extract_archetypes(matrix, encoder, {4, 3, 300, 1e-6});
    for (const auto &p : arch.patterns.patterns) {
        std::printf("pattern %d: %s\n", p.source_cluster, archetypes::pattern_string(p.bits).c_str());
    }

    const auto labels = hybrid::label_map(matrix, arch.labels);
    auto model = hybrid::make_hybrid(encoder, arch.patterns, arch.patterns.size(), 2);
    hybrid::HybridConfig hc;
    hc.epochs = 10;
    hc.target_seed = 4;
    auto [trained, hist] = hybrid::train_hybrid(model, splits, labels, hc);
    for (const auto &row : hist.epochs) {
        std::printf("epoch %2d loss=%.5f val_acc=%.4f\n", row.epoch, row.loss, row.accuracy);
    }

    const auto test_labels = hybrid::labels_for(splits.test, labels);
    qham::BackendConfig noisy;
    noisy.kind = qham::Backend::noisy;
    noisy.noise = noise::sample_noise_spec(qham::circuit_length(trained.n()), trained.n(), 5);
    for (const auto &backend : {qham::BackendConfig{}, noisy}) {
        const auto r = hybrid::evaluate(trained, splits.test, test_labels, backend, hc.target_seed);
        std::printf("%-6s mse=%.4f roc_auc=%.4f f1=%.4f accuracy=%.4f\n", r.environment.c_str(),
                    r.mse, r.roc_auc, r.f1, r.accuracy);
    }
    return 0;
}
