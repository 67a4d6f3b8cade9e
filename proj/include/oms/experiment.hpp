#pragma once

// Experiment driver behind the CLI: builds streams and spaces from an
// ExperimentConfig, runs repetitions, paired A/B comparisons and bit audits,
// and writes the output files.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oms/config.hpp"
#include "oms/data.hpp"
#include "oms/learners.hpp"
#include "oms/metrics.hpp"
#include "oms/regret.hpp"
#include "oms/wire.hpp"

namespace oms {

struct PreparedRun {
    std::vector<ExampleStream> streams;
    LearnerConfig learner;
    std::uint64_t seed = 0;
};

struct RepetitionResult {
    RunArtifact artifact;
    double seconds = 0.0;
    std::vector<double> regret;  // per space, empty unless requested
};

class Experiment {
public:
    explicit Experiment(ExperimentConfig config) : config_(std::move(config)) {
        if (config_.dataset.kind == DatasetKind::Csv)
            dataset_ = ingest_csv(config_.dataset.path, config_.dataset.target_column);
    }

    const ExperimentConfig& config() const noexcept { return config_; }
    const std::optional<Dataset>& dataset() const noexcept { return dataset_; }

    // Repetition r uses seed + r for data, permutation and sampling. Random
    // features come from the master seed and are shared by all repetitions.
    std::uint64_t repetition_seed(std::size_t rep) const { return config_.seed + rep; }

    PreparedRun prepare(std::size_t rep, LearnerMode mode) const {
        PreparedRun run;
        run.seed = repetition_seed(rep);
        const auto& ds = config_.dataset;
        std::size_t horizon = config_.horizon.value_or(0);
        switch (ds.kind) {
            case DatasetKind::Csv: {
                run.streams = preprocess_and_partition(*dataset_, config_.clients, run.seed);
                const std::size_t available = run.streams.front().size();
                if (horizon == 0) horizon = available;
                if (horizon > available)
                    throw ConfigError("horizon", "T=" + std::to_string(horizon) + " exceeds the " +
                                                     std::to_string(available) + " examples per client");
                break;
            }
            case DatasetKind::SyntheticLinear:
                run.streams = generate_synthetic_linear(
                                  {ds.dim, horizon, config_.clients, ds.noise, ds.signal_radius, run.seed})
                                  .streams;
                break;
            case DatasetKind::Adversarial:
                run.streams = generate_adversarial({ds.adversary, ds.arms, ds.dim, horizon, config_.clients,
                                                    config_.subset_size, ds.rho, ds.hidden_arm, run.seed})
                                  .streams;
                break;
        }
        const std::size_t epochs = mode == LearnerMode::Noncooperative ? horizon : config_.epochs.value_or(horizon);
        if (epochs == 0 || horizon % epochs != 0)
            throw ConfigError("epochs", "R must divide T (T=" + std::to_string(horizon) + ", R=" +
                                            std::to_string(epochs) + ")");

        const auto loss = config_.effective_loss();
        const std::size_t dim = run.streams.front().dim();
        std::vector<HypothesisSpace> spaces;
        switch (config_.spaces.kind) {
            case SpacesKind::NestedLinear: {
                double bound = config_.spaces.feature_bound.value_or(max_input_norm(run.streams));
                if (!(bound > 0.0)) bound = 1.0;
                spaces = nested_linear_spaces(dim, config_.spaces.radii, bound, loss);
                break;
            }
            case SpacesKind::Rff:
                spaces = rff_spaces(dim, config_.spaces.widths, config_.spaces.features, config_.spaces.radius,
                                    config_.seed, loss);
                break;
            case SpacesKind::Basis:
                spaces = adversarial_spaces(ds.adversary, ds.arms, dim);
                break;
        }
        for (std::size_t i = 0; i < spaces.size(); ++i) {
            auto c = SpaceConstants{spaces[i].loss_bound(), spaces[i].lipschitz_bound()};
            if (!config_.spaces.loss_bounds.empty()) c.loss_bound = config_.spaces.loss_bounds[i];
            if (!config_.spaces.lipschitz_bounds.empty()) c.lipschitz_bound = config_.spaces.lipschitz_bounds[i];
            spaces[i].set_constants(c);
        }

        run.learner.mode = mode;
        run.learner.problem.spaces = std::move(spaces);
        run.learner.problem.loss = LossFunction(loss);
        run.learner.problem.subset_size = config_.subset_size;
        run.learner.problem.seed = run.seed;
        run.learner.problem.check_bounds = config_.check_bounds;
        run.learner.clients = config_.clients;
        run.learner.horizon = horizon;
        run.learner.epochs = epochs;
        run.learner.initial = config_.initial;
        return run;
    }

    RepetitionResult execute(const PreparedRun& run, const FrameObserver* observer = nullptr) const {
        RepetitionResult out;
        const auto start = std::chrono::steady_clock::now();
        out.artifact = run_learner(run.learner, run.streams, observer);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (config_.compute_regret) {
            const auto& problem = run.learner.problem;
            for (const auto& space : problem.spaces) {
                const auto fit =
                    best_comparator(run.streams, run.learner.horizon, problem.loss, space, config_.comparator_steps);
                out.regret.push_back(
                    regret_accounting(out.artifact.trace, run.streams, problem.loss, space, fit.parameter));
            }
        }
        return out;
    }

    RepetitionResult run_repetition(std::size_t rep, LearnerMode mode) const { return execute(prepare(rep, mode)); }

private:
    ExperimentConfig config_;
    std::optional<Dataset> dataset_;
};

// OMS_OUTPUT_DIR overrides the configured output directory.
inline std::filesystem::path output_root(const ExperimentConfig& config) {
    if (const char* env = std::getenv("OMS_OUTPUT_DIR"); env && *env) return env;
    return config.output_dir;
}

namespace detail {

inline nlohmann::json describe(const Experiment& exp, const LearnerConfig& learner) {
    const auto& c = exp.config();
    nlohmann::json j;
    j["K"] = learner.problem.num_spaces();
    j["J"] = learner.problem.subset_size;
    j["M"] = learner.clients;
    j["T"] = learner.horizon;
    j["R"] = learner.effective_epochs();
    j["loss"] = to_string(learner.problem.loss.kind());
    j["seed"] = c.seed;
    j["repetitions"] = c.repetitions;
    nlohmann::json ds;
    switch (c.dataset.kind) {
        case DatasetKind::Csv:
            ds["kind"] = "csv";
            ds["source"] = c.dataset.path;
            ds["target_column"] = c.dataset.target_column;
            ds["rows"] = exp.dataset()->rows();
            ds["dim"] = exp.dataset()->dim();
            break;
        case DatasetKind::SyntheticLinear:
            ds["kind"] = "synthetic_linear";
            ds["dim"] = c.dataset.dim;
            break;
        case DatasetKind::Adversarial:
            ds["kind"] = "adversarial";
            ds["case"] = c.dataset.adversary == AdversaryKind::BiasedArm ? "biased_arm" : "bernoulli_symmetric";
            ds["arms"] = c.dataset.arms;
            ds["dim"] = c.dataset.dim;
            break;
    }
    j["dataset"] = ds;
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace detail

struct RunReport {
    MetricsSummary summary;
    std::filesystem::path directory;
};

// `run`: <out>/run/rep_<r>/trace.csv, <out>/run/summary.json and a separate
// <out>/run/timing.json so the summary stays deterministic.
inline RunReport command_run(const Experiment& exp) {
    const auto& c = exp.config();
    RunReport report;
    report.directory = output_root(c) / "run";
    nlohmann::json header;
    nlohmann::json timing = nlohmann::json::array();
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const auto prepared = exp.prepare(rep, c.mode);
        if (rep == 0) header = detail::describe(exp, prepared.learner);
        const auto result = exp.execute(prepared);
        const auto& art = result.artifact;
        const double per_client = result.seconds / static_cast<double>(art.clients);
        add_repetition(report.summary, art.trace, art.final_distribution, per_client);
        if (!result.regret.empty()) report.summary.regret.push_back(result.regret);
        std::ostringstream csv;
        write_trace_csv(csv, art.trace);
        detail::write_text(report.directory / ("rep_" + std::to_string(rep)) / "trace.csv", csv.str());
        timing.push_back({{"repetition", rep}, {"seconds", result.seconds}, {"seconds_per_client", per_client}});
    }
    const auto& s = report.summary;
    nlohmann::json j = header;
    j["schema_version"] = kSummarySchemaVersion;
    j["trace_schema_version"] = kTraceSchemaVersion;
    j["command"] = "run";
    j["mode"] = to_string(c.mode);
    j["mse"] = {{"mean", s.mse_stats.mean}, {"stddev", s.mse_stats.stddev}, {"per_repetition", s.mse}};
    j["cumulative_loss"] = s.cumulative_loss;
    j["uplink_bits"] = s.uplink_bits;
    j["downlink_bits"] = s.downlink_bits;
    j["final_distribution"] = s.final_distribution;
    if (!s.regret.empty()) j["regret"] = s.regret;
    detail::write_json(report.directory / "summary.json", j);
    detail::write_json(report.directory / "timing.json",
                       {{"note", "wall clock of a serial simulation divided by M; indicative only"}, {"runs", timing}});
    return report;
}

struct AbReport {
    std::vector<double> mse_federated;
    std::vector<double> mse_noncooperative;
    std::vector<double> delta;  // MSE(NCO) - MSE(FOMD)
    MeanStd delta_stats;
    std::size_t wins = 0;  // repetitions with delta > 0
    double p_value = 1.0;
    std::filesystem::path directory;
};

// `ab`: paired FOMD-OMS vs NCO-OMS runs on identical data and sampling seeds.
inline AbReport command_ab(const Experiment& exp) {
    const auto& c = exp.config();
    AbReport report;
    report.directory = output_root(c) / "ab";
    nlohmann::json header;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const auto fed = exp.prepare(rep, LearnerMode::Federated);
        auto nco = fed;
        nco.learner.mode = LearnerMode::Noncooperative;
        nco.learner.epochs = nco.learner.horizon;
        if (rep == 0) header = detail::describe(exp, fed.learner);
        const auto a = exp.execute(fed).artifact;
        const auto b = exp.execute(nco).artifact;
        report.mse_federated.push_back(compute_mse(a.trace));
        report.mse_noncooperative.push_back(compute_mse(b.trace));
        report.delta.push_back(report.mse_noncooperative.back() - report.mse_federated.back());
        if (report.delta.back() > 0.0) ++report.wins;
        rows.push_back({{"repetition", rep},
                        {"seed", fed.seed},
                        {"mse_federated", report.mse_federated.back()},
                        {"mse_noncooperative", report.mse_noncooperative.back()},
                        {"delta", report.delta.back()}});
    }
    report.delta_stats = mean_std(report.delta);
    report.p_value = sign_test_p_value(report.wins, report.delta.size());
    const auto fed_stats = mean_std(report.mse_federated);
    const auto nco_stats = mean_std(report.mse_noncooperative);
    const double mean = report.delta_stats.mean;

    nlohmann::json j = header;
    j["schema_version"] = kSummarySchemaVersion;
    j["command"] = "ab";
    j["mean_delta"] = mean;
    j["stddev_delta"] = report.delta_stats.stddev;
    j["sign"] = mean > 0.0 ? "positive" : (mean < 0.0 ? "negative" : "zero");
    j["sign_meaning"] = "positive: the federated learner has the lower MSE";
    j["wins_federated"] = report.wins;
    j["sign_test_p_value"] = report.p_value;
    j["mse_federated"] = {{"mean", fed_stats.mean}, {"stddev", fed_stats.stddev}};
    j["mse_noncooperative"] = {{"mean", nco_stats.mean}, {"stddev", nco_stats.stddev}};
    j["repetitions_detail"] = rows;
    detail::write_json(report.directory / "summary.json", j);

    std::ostringstream table;
    table << "| Dataset | NCO-OMS MSE | FOMD-OMS MSE | Delta |\n|---|---|---|---|\n";
    table << "| " << header["dataset"]["kind"].get<std::string>() << " | " << format_double(nco_stats.mean) << " +- "
          << format_double(nco_stats.stddev) << " | " << format_double(fed_stats.mean) << " +- "
          << format_double(fed_stats.stddev) << " | " << format_double(mean) << " |\n";
    detail::write_text(report.directory / "table.md", table.str());
    return report;
}

struct AuditReport {
    std::uint64_t downlink_messages = 0;
    std::uint64_t uplink_messages = 0;
    std::uint64_t downlink_bits = 0;
    std::uint64_t uplink_bits = 0;
    std::vector<std::string> mismatches;
    std::filesystem::path directory;

    bool ok() const noexcept { return mismatches.empty(); }
};

namespace detail {

inline bool same_as_float32(const std::vector<double>& sent, const std::vector<double>& decoded) {
    if (sent.size() != decoded.size()) return false;
    for (std::size_t i = 0; i < sent.size(); ++i)
        if (static_cast<double>(static_cast<float>(sent[i])) != decoded[i]) return false;
    return true;
}

}  // namespace detail

// Runs the federated learner for the first repetition and checks, per
// message: header bit count == account_bits == bits consumed by decoding,
// frame size == header + ceil(bits / 8), and the decoded content matches.
inline AuditReport audit_bits(const Experiment& exp) {
    const auto& c = exp.config();
    if (c.mode != LearnerMode::Federated) throw ConfigError("mode", "audit-bits needs the federated learner");
    const auto prepared = exp.prepare(0, LearnerMode::Federated);
    const std::size_t k = prepared.learner.problem.num_spaces();
    const auto dims = prepared.learner.problem.dims();
    AuditReport report;

    auto check = [&](const auto& msg, std::span<const std::uint8_t> frame, std::uint64_t bits, auto decoded,
                     const char* what) {
        const auto expected = account_bits(msg, k);
        const auto header = parse_header(frame);
        const auto where = std::string(what) + " epoch " + std::to_string(msg.epoch) + " client " +
                           std::to_string(msg.client);
        if (bits != expected) report.mismatches.push_back(where + ": reported bits differ from account_bits");
        if (header.payload_bits != expected) report.mismatches.push_back(where + ": header bits differ from account_bits");
        if (frame.size() != kFrameHeaderBytes + (expected + 7) / 8)
            report.mismatches.push_back(where + ": frame size differs from ceil(bits / 8) + header");
        if (decoded.indices != msg.indices) report.mismatches.push_back(where + ": decoded indices differ");
        return decoded;
    };

    FrameObserver observer;
    observer.on_downlink = [&](const DownlinkMessage& msg, std::span<const std::uint8_t> frame, std::uint64_t bits) {
        ++report.downlink_messages;
        report.downlink_bits += bits;
        const auto d = check(msg, frame, bits, decode_downlink(frame, dims), "downlink");
        for (std::size_t a = 0; a < msg.parameters.size() && a < d.parameters.size(); ++a)
            if (!detail::same_as_float32(msg.parameters[a], d.parameters[a]))
                report.mismatches.push_back("downlink parameters differ after decoding");
    };
    observer.on_uplink = [&](const UplinkMessage& msg, std::span<const std::uint8_t> frame, std::uint64_t bits) {
        ++report.uplink_messages;
        report.uplink_bits += bits;
        const auto d = check(msg, frame, bits, decode_uplink(frame, dims), "uplink");
        if (!detail::same_as_float32(msg.losses, d.losses)) report.mismatches.push_back("uplink losses differ");
        for (std::size_t a = 0; a < msg.gradients.size() && a < d.gradients.size(); ++a)
            if (!detail::same_as_float32(msg.gradients[a], d.gradients[a]))
                report.mismatches.push_back("uplink gradients differ after decoding");
    };

    const auto art = exp.execute(prepared, &observer).artifact;
    std::uint64_t trace_up = 0, trace_down = 0;
    for (const auto& r : art.trace) {
        trace_up += r.uplink_bits;
        trace_down += r.downlink_bits;
    }
    if (trace_up != report.uplink_bits || art.uplink_bits != report.uplink_bits)
        report.mismatches.push_back("uplink totals disagree between trace, counters and frames");
    if (trace_down != report.downlink_bits || art.downlink_bits != report.downlink_bits)
        report.mismatches.push_back("downlink totals disagree between trace, counters and frames");

    report.directory = output_root(c) / "audit";
    nlohmann::json j = detail::describe(exp, prepared.learner);
    j["schema_version"] = kSummarySchemaVersion;
    j["command"] = "audit-bits";
    j["downlink_messages"] = report.downlink_messages;
    j["uplink_messages"] = report.uplink_messages;
    j["downlink_bits"] = report.downlink_bits;
    j["uplink_bits"] = report.uplink_bits;
    j["ok"] = report.ok();
    j["mismatches"] = report.mismatches;
    detail::write_json(report.directory / "summary.json", j);
    return report;
}

}  // namespace oms
