// Command-line front end: run | ab | audit-bits | validate <config.json>
//
// Exit codes: 0 success, 2 configuration error, 1 any other failure, 3 a
// bit audit that found mismatches. Errors go to stderr as one JSON object.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "oms/oms.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message, const std::string& field = {}) {
    nlohmann::json err{{"kind", kind}, {"message", message}};
    if (!field.empty()) err["field"] = field;
    std::cerr << nlohmann::json{{"error", err}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated online model selection experiments"};
    app.require_subcommand(1);
    std::string path;
    auto* run = app.add_subcommand("run", "execute repetitions, write trace CSVs and summary JSON");
    auto* ab = app.add_subcommand("ab", "paired federated vs noncooperative comparison");
    auto* audit = app.add_subcommand("audit-bits", "cross-check bit accounting against serialized frames");
    auto* validate = app.add_subcommand("validate", "schema check only");
    for (auto* sub : {run, ab, audit, validate}) sub->add_option("config", path, "configuration JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, "usage", e.what());
    }

    try {
        const auto config = oms::load_config(path);
        if (validate->parsed()) {
            std::cout << nlohmann::json{{"valid", true}, {"K", config.num_spaces()}}.dump() << '\n';
            return 0;
        }
        const oms::Experiment exp(config);
        if (run->parsed()) {
            const auto report = oms::command_run(exp);
            std::cout << nlohmann::json{{"output", report.directory.string()},
                                        {"mse_mean", report.summary.mse_stats.mean},
                                        {"mse_stddev", report.summary.mse_stats.stddev}}
                             .dump()
                      << '\n';
        } else if (ab->parsed()) {
            const auto report = oms::command_ab(exp);
            std::cout << nlohmann::json{{"output", report.directory.string()},
                                        {"mean_delta", report.delta_stats.mean},
                                        {"sign_test_p_value", report.p_value}}
                             .dump()
                      << '\n';
        } else if (audit->parsed()) {
            const auto report = oms::audit_bits(exp);
            std::cout << nlohmann::json{{"output", report.directory.string()},
                                        {"ok", report.ok()},
                                        {"messages", report.downlink_messages + report.uplink_messages}}
                             .dump()
                      << '\n';
            if (!report.ok()) return fail(3, "audit", report.mismatches.front());
        }
        return 0;
    } catch (const oms::ConfigError& e) {
        return fail(2, "validation", e.message(), e.field());
    } catch (const oms::DataError& e) {
        return fail(1, "data", e.what());
    } catch (const std::exception& e) {
        return fail(1, "runtime", e.what());
    }
}
