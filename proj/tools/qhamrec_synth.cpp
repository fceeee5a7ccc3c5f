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

// Writes a synthetic ratings file in the "user::movie::rating::timestamp"
// format with a planted group structure.

#include "qhamrec/io.hpp"
#include "qhamrec/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
    qhamrec::synthetic::SyntheticConfig cfg;
    std::string out;
    CLI::App app{"Synthetic ratings generator"};
    app.add_option("--users", cfg.users, "users with at least 20 ratings");
    app.add_option("--sparse-users", cfg.sparse_users, "extra users below the rating threshold");
    app.add_option("--movies", cfg.movies);
    app.add_option("--groups", cfg.groups, "planted taste groups");
    app.add_option("--seed", cfg.seed);
    app.add_option("--out", out, "output file")->required();
    CLI11_PARSE(app, argc, argv);
    try {
        const auto data = qhamrec::synthetic::generate(cfg);
        qhamrec::io::write_file_atomic(out, qhamrec::synthetic::to_text(data.records));
        std::cout << "wrote " << data.records.size() << " ratings to " << out << "\n";
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
