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

// qhamrec <command> [--config FILE] [--set section.key=value]... [--backend ideal|noisy] --out DIR

#include "qhamrec/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

int main(int argc, char **argv) {
    namespace pl = qhamrec::pipeline;

    CLI::App app{"Hybrid quantum-classical recommender pipeline"};
    app.set_version_flag("--version", std::string(pl::kSoftwareVersion));
    app.require_subcommand(1, 1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string backend;
    std::string out_dir;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"ingest", "parse ratings, build the matrix and the splits"},
        {"train-ae", "train the autoencoder"},
        {"archetypes", "cluster users and polarize the encoded centroids"},
        {"train-hybrid", "train the encoder -> QHAM -> softmax classifier"},
        {"evaluate", "score the hybrid model on the test split"},
        {"report", "tabulate every metrics report in the output directory"},
    };
    for (const auto &[name, help] : commands) {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "INI run configuration");
        sub->add_option("--set", overrides, "override one key, e.g. --set hybrid.epochs=5")
            ->take_all();
        sub->add_option("--backend", backend, "ideal or noisy")
            ->check(CLI::IsMember({"ideal", "noisy"}));
        sub->add_option("--out", out_dir, "artifact directory")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : pl::kInputError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    pl::Context ctx;
    ctx.out = out_dir;
    try {
        std::map<std::string, std::string> kv;
        if (!config_path.empty()) {
            if (!std::filesystem::is_regular_file(config_path)) {
                throw qhamrec::IoError("config file not found: " + config_path);
            }
            kv = qhamrec::config::read_ini(config_path);
        }
        for (const auto &o : overrides) {
            qhamrec::config::apply_override(kv, o);
        }
        if (!backend.empty()) {
            kv["backend.kind"] = backend;
        }
        ctx.cfg = qhamrec::config::from_map(kv);
        if (!ctx.cfg.ratings.empty() && ctx.cfg.ratings.is_relative() && !config_path.empty()) {
            // relative dataset paths are taken relative to the config file
            const auto base = std::filesystem::path(config_path).parent_path();
            if (!std::filesystem::exists(ctx.cfg.ratings) && std::filesystem::exists(base / ctx.cfg.ratings)) {
                ctx.cfg.ratings = base / ctx.cfg.ratings;
            }
        }
    } catch (const qhamrec::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return pl::kInputError;
    }
    return pl::run(command, ctx);
}
