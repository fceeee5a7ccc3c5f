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
 * Pipeline stages behind the command-line tool. Every stage reads its
 * upstream artifacts from the output directory, writes its own artifacts
 * atomically and records their SHA-256 in manifest.json. Wall-clock timings
 * go to timings.json so the manifest itself stays reproducible.
 *
 * Layout of the output directory:
 *
 *     ingest        matrix.bin, splits.json
 *     train-ae      autoencoder.json, ae_history.csv, ae_metrics.json
 *     archetypes    archetypes.json, labels.csv
 *     train-hybrid  hybrid_model.json, hybrid_history.csv
 *     evaluate      metrics_<backend>.json, metrics_<backend>.csv
 *     report        report.csv, report.txt
 */
#pragma once

#include "archetypes.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "hybrid.hpp"
#include "io.hpp"
#include "nn.hpp"
#include "noise.hpp"
#include "qham.hpp"

#include <nlohmann/json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace qhamrec::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char *kSoftwareName = "qhamrec";
constexpr const char *kSoftwareVersion = "0.1.0";

class PipelineOrderError : public Error {
  public:
    using Error::Error;
};

class ReportError : public Error {
  public:
    using Error::Error;
};

class LockError : public Error {
  public:
    using Error::Error;
};

enum ExitCode : int {
    kOk = 0,
    kOther = 1,
    kInputError = 2,
    kOrderError = 3,
    kReportError = 4,
};

/// Exclusive advisory lock on OUT/.lock, released on destruction.
class OutputLock {
  public:
    explicit OutputLock(const fs::path &dir) : path_(dir / ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) {
            throw IoError("cannot open lock file " + path_.string());
        }
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw LockError("another qhamrec command holds " + path_.string());
        }
    }
    ~OutputLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    OutputLock(const OutputLock &) = delete;
    OutputLock &operator=(const OutputLock &) = delete;

  private:
    fs::path path_;
    int fd_ = -1;
};

class Manifest {
  public:
    explicit Manifest(fs::path dir) : dir_(std::move(dir)) {
        const auto p = dir_ / "manifest.json";
        if (fs::exists(p)) {
            try {
                j_ = json::parse(io::read_file(p));
            } catch (const json::parse_error &e) {
                throw IoError("manifest.json is corrupt: " + std::string(e.what()));
            }
        } else {
            j_ = {{"format", "qhamrec-manifest"},
                  {"software", {{"name", kSoftwareName}, {"version", kSoftwareVersion}}},
                  {"stages", json::object()}};
        }
    }

    /// Checksum recorded for `file` by whichever stage wrote it, or "".
    [[nodiscard]] std::string recorded(const std::string &file) const {
        for (const auto &[name, stage] : j_.at("stages").items()) {
            if (stage.contains("artifacts") && stage["artifacts"].contains(file)) {
                return stage["artifacts"][file].get<std::string>();
            }
        }
        return "";
    }

    void record(const std::string &stage, const json &entry) {
        j_["stages"][stage] = entry;
        j_["software"] = {{"name", kSoftwareName}, {"version", kSoftwareVersion}};
        io::write_file_atomic(dir_ / "manifest.json", j_.dump(2) + "\n");
    }

    [[nodiscard]] const json &data() const { return j_; }

  private:
    fs::path dir_;
    json j_;
};

struct Context {
    config::RunConfig cfg;
    fs::path out;
    std::ostream *log = &std::cout;
};

namespace detail {

struct Upstream {
    const char *file;
    const char *stage;
};

inline constexpr Upstream kMatrix{"matrix.bin", "ingest"};
inline constexpr Upstream kSplits{"splits.json", "ingest"};
inline constexpr Upstream kAutoencoder{"autoencoder.json", "train-ae"};
inline constexpr Upstream kArchetypes{"archetypes.json", "archetypes"};
inline constexpr Upstream kLabels{"labels.csv", "archetypes"};
inline constexpr Upstream kModel{"hybrid_model.json", "train-hybrid"};

/// Path of an upstream artifact after checking it exists and is unchanged.
inline fs::path require(const Context &ctx, const Manifest &m, const Upstream &u,
                        json &inputs) {
    const auto p = ctx.out / u.file;
    if (!fs::exists(p)) {
        throw PipelineOrderError(std::string("missing ") + u.file + " in " + ctx.out.string() +
                                 "; run `qhamrec " + u.stage + "` first");
    }
    const auto sum = io::file_sha256(p);
    const auto rec = m.recorded(u.file);
    if (!rec.empty() && rec != sum) {
        throw PipelineOrderError(std::string(u.file) + " changed since `" + u.stage +
                                 "` wrote it; rerun `qhamrec " + u.stage + "`");
    }
    inputs[u.file] = sum;
    return p;
}

inline json load_json(const fs::path &p) {
    try {
        return json::parse(io::read_file(p));
    } catch (const json::exception &e) {
        throw IoError(p.filename().string() + ": " + e.what());
    }
}

class StageWriter {
  public:
    StageWriter(const Context &ctx, std::string stage)
        : ctx_(ctx), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

    void write(const std::string &file, const std::string &bytes) {
        io::write_file_atomic(ctx_.out / file, bytes);
        artifacts_[file] = io::sha256_hex(bytes);
    }

    json &inputs() { return inputs_; }
    json &extra() { return extra_; }

    void commit(Manifest &m) {
        json entry = {{"config", config::to_json(ctx_.cfg)},
                      {"inputs", inputs_},
                      {"artifacts", artifacts_}};
        for (const auto &[k, v] : extra_.items()) {
            entry[k] = v;
        }
        m.record(stage_, entry);

        const auto seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const auto tp = ctx_.out / "timings.json";
        json t = json::object();
        if (fs::exists(tp)) {
            try {
                t = json::parse(io::read_file(tp));
            } catch (const json::exception &) {
                t = json::object(); // timings are advisory
            }
        }
        t[stage_] = {{"wall_seconds", seconds}};
        io::write_file_atomic(tp, t.dump(2) + "\n");
    }

  private:
    const Context &ctx_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
    json inputs_ = json::object();
    json artifacts_ = json::object();
    json extra_ = json::object();
};

inline nn::EncoderParams load_encoder(const fs::path &p) {
    auto net = nn::network_from_json(load_json(p));
    if (net.layers.size() != 4) {
        throw IoError("autoencoder.json does not hold a four-layer autoencoder");
    }
    return {net.layers[0], net.layers[1]};
}

inline std::map<std::int64_t, int> parse_labels_csv(const std::string &text) {
    std::map<std::int64_t, int> out;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "user_id,cluster") {
        throw IoError("labels.csv: unexpected header '" + line + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos) {
                throw std::invalid_argument("no comma");
            }
            out[std::stoll(line.substr(0, comma))] = std::stoi(line.substr(comma + 1));
        } catch (const std::exception &) {
            throw IoError("labels.csv line " + std::to_string(line_no) + " is malformed");
        }
    }
    return out;
}

inline qham::BackendConfig backend_config(const config::RunConfig &cfg, std::size_t n) {
    qham::BackendConfig b;
    b.kind = cfg.backend;
    b.engine = cfg.engine;
    b.shots = cfg.shots;
    if (b.kind == qham::Backend::noisy) {
        b.noise = noise::sample_noise_spec(qham::circuit_length(n), n, cfg.seeds.noise);
    }
    return b;
}

} // namespace detail

// ---------------------------------------------------------------------------

inline void cmd_ingest(const Context &ctx) {
    const auto &cfg = ctx.cfg;
    if (cfg.ratings.empty()) {
        throw ConfigurationError("data.ratings is not set");
    }
    if (!fs::is_regular_file(cfg.ratings)) {
        throw IoError("ratings file not found: " + cfg.ratings.string());
    }
    // everything is computed before the first artifact is written
    const auto raw = io::read_file(cfg.ratings);
    std::istringstream in(raw);
    const auto records = dataset::parse_ratings(in);
    const auto matrix = dataset::build_matrix(records, cfg.min_ratings);
    const auto splits = dataset::split(matrix, cfg.split_ratio, cfg.seeds.split);

    fs::create_directories(ctx.out);
    OutputLock lock(ctx.out);
    Manifest manifest(ctx.out);
    detail::StageWriter w(ctx, "ingest");
    w.inputs()["ratings"] = io::sha256_hex(raw);
    w.write("matrix.bin", dataset::serialize_matrix(matrix));
    w.write("splits.json", dataset::split_manifest(splits).dump(1) + "\n");
    w.extra()["summary"] = {{"records", records.size()},
                            {"users", matrix.users()},
                            {"movies", matrix.movies()},
                            {"train", splits.train.users()},
                            {"validation", splits.validation.users()},
                            {"test", splits.test.users()}};
    w.commit(manifest);
    *ctx.log << "users=" << matrix.users() << ", movies=" << matrix.movies()
             << ", ratings=" << records.size() << ", train=" << splits.train.users()
             << ", validation=" << splits.validation.users()
             << ", test=" << splits.test.users() << "\n";
}

inline void cmd_train_ae(const Context &ctx) {
    const auto &cfg = ctx.cfg;
    if (!fs::is_directory(ctx.out)) {
        throw PipelineOrderError("output directory " + ctx.out.string() +
                                 " does not exist; run `qhamrec ingest` first");
    }
    OutputLock lock(ctx.out);
    Manifest manifest(ctx.out);
    detail::StageWriter w(ctx, "train-ae");
    const auto matrix = dataset::read_matrix(detail::require(ctx, manifest, detail::kMatrix, w.inputs()));
    const auto splits = dataset::apply_split_manifest(
        matrix, detail::load_json(detail::require(ctx, manifest, detail::kSplits, w.inputs())));

    nn::AutoencoderConfig ac;
    ac.latent = static_cast<Eigen::Index>(cfg.latent);
    ac.epochs = cfg.ae_epochs;
    ac.batch_size = static_cast<Eigen::Index>(cfg.ae_batch);
    ac.adam.lr = cfg.ae_lr;
    ac.seed = cfg.seeds.init;
    ac.mask_unrated = cfg.ae_mask_unrated;
    auto [params, history] = nn::train_autoencoder(splits, ac);

    w.write("autoencoder.json", nn::network_to_json(params.net).dump() + "\n");
    w.write("ae_history.csv", nn::history_csv(history));
    const json metrics = {{"test_mse", history.test_loss},
                          {"final_train_mse", history.epochs.back().train_loss},
                          {"final_val_mse", history.epochs.back().val_loss},
                          {"epochs", ac.epochs}};
    w.write("ae_metrics.json", metrics.dump(2) + "\n");
    w.commit(manifest);
    *ctx.log << "autoencoder: epochs=" << ac.epochs << ", test_mse=" << io::fmt_double(history.test_loss)
             << "\n";
}

inline void cmd_archetypes(const Context &ctx) {
    const auto &cfg = ctx.cfg;
    if (!fs::is_directory(ctx.out)) {
        throw PipelineOrderError("output directory " + ctx.out.string() +
                                 " does not exist; run `qhamrec ingest` first");
    }
    OutputLock lock(ctx.out);
    Manifest manifest(ctx.out);
    detail::StageWriter w(ctx, "archetypes");
    const auto matrix = dataset::read_matrix(detail::require(ctx, manifest, detail::kMatrix, w.inputs()));
    const auto encoder = detail::load_encoder(detail::require(ctx, manifest, detail::kAutoencoder, w.inputs()));
    if (static_cast<std::size_t>(encoder.latent_dim()) != cfg.latent) {
        throw ConfigurationError("model.latent=" + std::to_string(cfg.latent) +
                                 " but the trained encoder has " +
                                 std::to_string(encoder.latent_dim()) + " latent units");
    }
    if (cfg.clusters == 1) {
        std::cerr << "warning: k=1 makes single-class classification degenerate\n";
    }
    archetypes::KMeansConfig kc{cfg.clusters, cfg.seeds.kmeans, cfg.kmeans_max_iter, cfg.kmeans_tol};
    const auto result = archetypes::extract_archetypes(matrix, encoder, kc);

    w.write("archetypes.json", archetypes::archetypes_to_json(result).dump(2) + "\n");
    w.write("labels.csv", archetypes::labels_csv(matrix, result.labels));
    w.commit(manifest);
    *ctx.log << "archetypes: k=" << result.patterns.size() << ", n=" << result.patterns.n;
    for (const auto &p : result.patterns.patterns) {
        *ctx.log << ", " << archetypes::pattern_string(p.bits);
    }
    *ctx.log << "\n";
}

inline void cmd_train_hybrid(const Context &ctx) {
    const auto &cfg = ctx.cfg;
    if (!fs::is_directory(ctx.out)) {
        throw PipelineOrderError("output directory " + ctx.out.string() +
                                 " does not exist; run `qhamrec ingest` first");
    }
    OutputLock lock(ctx.out);
    Manifest manifest(ctx.out);
    detail::StageWriter w(ctx, "train-hybrid");
    const auto matrix = dataset::read_matrix(detail::require(ctx, manifest, detail::kMatrix, w.inputs()));
    const auto splits = dataset::apply_split_manifest(
        matrix, detail::load_json(detail::require(ctx, manifest, detail::kSplits, w.inputs())));
    const auto encoder = detail::load_encoder(detail::require(ctx, manifest, detail::kAutoencoder, w.inputs()));
    const auto patterns = archetypes::patterns_from_json(
        detail::load_json(detail::require(ctx, manifest, detail::kArchetypes, w.inputs())));
    const auto labels = detail::parse_labels_csv(
        io::read_file(detail::require(ctx, manifest, detail::kLabels, w.inputs())));

    auto model = hybrid::make_hybrid(encoder, patterns, patterns.size(), cfg.seeds.init);
    model.neuron.trainable = cfg.train_quantum;
    hybrid::HybridConfig hc;
    hc.epochs = cfg.hybrid_epochs;
    hc.batch_size = cfg.hybrid_batch;
    hc.adam.lr = cfg.hybrid_lr;
    hc.encoder_adam.lr = cfg.ae_lr;
    hc.fine_tune_encoder = cfg.fine_tune_encoder;
    hc.target_seed = cfg.seeds.target;
    hc.backend = detail::backend_config(cfg, model.n());

    try {
        auto [trained, history] = hybrid::train_hybrid(model, splits, labels, hc);
        auto j = hybrid::model_to_json(trained, cfg.seeds.init, cfg.seeds.target);
        j["trained_on"] = qham::to_string(cfg.backend);
        w.write("hybrid_model.json", j.dump() + "\n");
        w.write("hybrid_history.csv", hybrid::history_csv(history));
        if (hc.backend.kind == qham::Backend::noisy) {
            w.extra()["noise_spec"] = noise::to_json(hc.backend.noise);
        }
        w.commit(manifest);
        const auto &last = history.epochs.back();
        *ctx.log << "hybrid: epochs=" << hc.epochs << ", loss=" << io::fmt_double(last.loss)
                 << ", val_accuracy=" << io::fmt_double(last.accuracy) << "\n";
    } catch (const hybrid::DivergenceError &e) {
        auto j = hybrid::model_to_json(e.last_good(), cfg.seeds.init, cfg.seeds.target);
        j["diverged_at_epoch"] = e.epoch();
        io::write_file_atomic(ctx.out / "hybrid_model.last_good.json", j.dump() + "\n");
        throw;
    }
}

inline void cmd_evaluate(const Context &ctx) {
    const auto &cfg = ctx.cfg;
    if (!fs::is_directory(ctx.out)) {
        throw PipelineOrderError("output directory " + ctx.out.string() +
                                 " does not exist; run `qhamrec ingest` first");
    }
    OutputLock lock(ctx.out);
    Manifest manifest(ctx.out);
    const std::string env = qham::to_string(cfg.backend);
    detail::StageWriter w(ctx, "evaluate-" + env);
    const auto matrix = dataset::read_matrix(detail::require(ctx, manifest, detail::kMatrix, w.inputs()));
    const auto splits = dataset::apply_split_manifest(
        matrix, detail::load_json(detail::require(ctx, manifest, detail::kSplits, w.inputs())));
    const auto encoder = detail::load_encoder(detail::require(ctx, manifest, detail::kAutoencoder, w.inputs()));
    const auto labels = detail::parse_labels_csv(
        io::read_file(detail::require(ctx, manifest, detail::kLabels, w.inputs())));
    const auto model = hybrid::model_from_json(
        detail::load_json(detail::require(ctx, manifest, detail::kModel, w.inputs())), encoder);

    const auto backend = detail::backend_config(cfg, model.n());
    const auto report = hybrid::evaluate(model, splits.test, hybrid::labels_for(splits.test, labels),
                                         backend, cfg.seeds.target);
    w.write("metrics_" + env + ".json", hybrid::to_json(report).dump(2) + "\n");
    w.write("metrics_" + env + ".csv", hybrid::metrics_csv_header() + hybrid::metrics_csv_row(report));
    if (backend.kind == qham::Backend::noisy) {
        w.extra()["noise_spec"] = noise::to_json(backend.noise);
    }
    w.commit(manifest);
    *ctx.log << env << ": mse=" << io::fmt_double(report.mse)
             << ", accuracy=" << io::fmt_double(report.accuracy)
             << ", f1=" << io::fmt_double(report.f1)
             << ", roc_auc=" << io::fmt_double(report.roc_auc) << "\n";
}

/// Collects metrics_*.json in OUT; "ideal" sorts before "noisy".
inline std::vector<hybrid::MetricsReport> collect_reports(const fs::path &out) {
    std::vector<fs::path> files;
    if (fs::is_directory(out)) {
        for (const auto &e : fs::directory_iterator(out)) {
            const auto name = e.path().filename().string();
            if (e.is_regular_file() && name.starts_with("metrics_") && name.ends_with(".json")) {
                files.push_back(e.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<hybrid::MetricsReport> reports;
    for (const auto &f : files) {
        try {
            reports.push_back(hybrid::metrics_from_json(json::parse(io::read_file(f))));
        } catch (const std::exception &e) {
            throw ReportError("cannot read " + f.filename().string() + ": " + e.what());
        }
    }
    if (reports.empty()) {
        throw ReportError("no metrics reports in " + out.string() + "; run `qhamrec evaluate` first");
    }
    return reports;
}

inline std::string report_text(const std::vector<hybrid::MetricsReport> &reports) {
    std::ostringstream s;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s %8s\n", "environment", "mse",
                  "roc_auc", "f1", "accuracy", "samples");
    s << line;
    for (const auto &r : reports) {
        std::snprintf(line, sizeof line, "%-12s %10.4f %10.4f %10.4f %10.4f %8zu\n",
                      r.environment.c_str(), r.mse, r.roc_auc, r.f1, r.accuracy, r.samples);
        s << line;
    }
    return s.str();
}

inline void cmd_report(const Context &ctx) {
    const auto reports = collect_reports(ctx.out);
    OutputLock lock(ctx.out);
    Manifest manifest(ctx.out);
    detail::StageWriter w(ctx, "report");
    std::string csv = hybrid::metrics_csv_header();
    for (const auto &r : reports) {
        csv += hybrid::metrics_csv_row(r);
    }
    const auto text = report_text(reports);
    w.write("report.csv", csv);
    w.write("report.txt", text);
    w.commit(manifest);
    *ctx.log << text;
}

/// Runs one command and maps failures onto the documented exit codes.
inline int run(const std::string &command, const Context &ctx, std::ostream &err = std::cerr) {
    try {
        if (command == "ingest") {
            cmd_ingest(ctx);
        } else if (command == "train-ae") {
            cmd_train_ae(ctx);
        } else if (command == "archetypes") {
            cmd_archetypes(ctx);
        } else if (command == "train-hybrid") {
            cmd_train_hybrid(ctx);
        } else if (command == "evaluate") {
            cmd_evaluate(ctx);
        } else if (command == "report") {
            cmd_report(ctx);
        } else {
            err << "error: unknown command '" << command << "'\n";
            return kInputError;
        }
        return kOk;
    } catch (const PipelineOrderError &e) {
        err << "error: " << e.what() << "\n";
        return kOrderError;
    } catch (const ReportError &e) {
        err << "error: " << e.what() << "\n";
        return kReportError;
    } catch (const IoError &e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const ValidationError &e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const EmptyDatasetError &e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const ConfigurationError &e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kOther;
    }
}

} // namespace qhamrec::pipeline
