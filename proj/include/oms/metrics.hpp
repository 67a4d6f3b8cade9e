#pragma once

// Lead-prediction MSE, repetition summaries and trace serialization.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "oms/stream.hpp"

namespace oms {

inline constexpr int kTraceSchemaVersion = 1;
inline constexpr int kSummarySchemaVersion = 1;

// (1/(MT)) sum (prediction - y)^2 over every trace row.
inline double compute_mse(std::span<const RoundRecord> trace) {
    if (trace.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& r : trace) {
        const double e = r.prediction - r.target;
        acc += e * e;
    }
    return acc / static_cast<double>(trace.size());
}

inline double cumulative_loss(std::span<const RoundRecord> trace) {
    double acc = 0.0;
    for (const auto& r : trace) acc += r.loss;
    return acc;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n - 1) deviation; 0 for a single value
};

inline MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return out;
}

struct MetricsSummary {
    std::vector<double> mse;              // one per repetition
    std::vector<double> cumulative_loss;  // one per repetition
    MeanStd mse_stats;
    std::vector<std::uint64_t> uplink_bits;
    std::vector<std::uint64_t> downlink_bits;
    std::vector<double> seconds_per_client;  // wall clock / M, indicative only
    std::vector<std::vector<double>> final_distribution;
    std::vector<std::vector<double>> regret;  // [repetition][space], empty unless requested
};

// Bit totals are the trace column sums, which equal the protocol counters.
inline void add_repetition(MetricsSummary& summary, std::span<const RoundRecord> trace,
                           std::vector<double> final_distribution, double seconds_per_client = 0.0) {
    summary.mse.push_back(compute_mse(trace));
    summary.cumulative_loss.push_back(cumulative_loss(trace));
    std::uint64_t up = 0, down = 0;
    for (const auto& r : trace) {
        up += r.uplink_bits;
        down += r.downlink_bits;
    }
    summary.uplink_bits.push_back(up);
    summary.downlink_bits.push_back(down);
    summary.seconds_per_client.push_back(seconds_per_client);
    summary.final_distribution.push_back(std::move(final_distribution));
    summary.mse_stats = mean_std(summary.mse);
}

// One-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
inline double sign_test_p_value(std::size_t wins, std::size_t trials) {
    double tail = 0.0;
    for (std::size_t k = wins; k <= trials; ++k)
        tail += std::exp(std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) -
                         static_cast<double>(trials) * std::log(2.0));
    return std::min(1.0, tail);
}

// Shortest round-trip decimal form; stable across platforms.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_trace_csv(std::ostream& out, std::span<const RoundRecord> trace) {
    out << "round,client,epoch,lead_index,prediction,loss,uplink_bits,downlink_bits,target\n";
    for (const auto& r : trace)
        out << r.round << ',' << r.client << ',' << r.epoch << ',' << r.lead_index << ',' << format_double(r.prediction)
            << ',' << format_double(r.loss) << ',' << r.uplink_bits << ',' << r.downlink_bits << ','
            << format_double(r.target) << '\n';
}

}  // namespace oms
