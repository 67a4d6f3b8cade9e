#pragma once

// Dataset ingestion, preprocessing, client partitioning and synthetic /
// adversarial stream generators.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oms/hypotheses.hpp"
#include "oms/log.hpp"
#include "oms/rng.hpp"
#include "oms/stream.hpp"

namespace oms {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::string target_name;
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    std::string source;

    std::size_t rows() const noexcept { return targets.size(); }
    std::size_t dim() const noexcept { return feature_names.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

}  // namespace detail

// Rectangular numeric CSV with a header row. Every column except
// `target_column` becomes a feature.
inline Dataset ingest_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
    const auto header_cells = detail::split_csv_line(line);
    std::vector<std::string> header(header_cells.begin(), header_cells.end());
    const auto target_it = std::find(header.begin(), header.end(), target_column);
    if (target_it == header.end()) {
        std::string available;
        for (const auto& h : header) available += (available.empty() ? "" : ", ") + h;
        throw DataError("target column '" + target_column + "' not found; available columns: " + available);
    }
    const auto target_idx = static_cast<std::size_t>(std::distance(header.begin(), target_it));

    Dataset ds;
    ds.source = path;
    ds.target_name = target_column;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != target_idx) ds.feature_names.push_back(header[c]);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " columns, found " + std::to_string(cells.size()));
        std::vector<double> x;
        x.reserve(ds.feature_names.size());
        double y = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto value = detail::parse_number(cells[c]);
            if (!value)
                throw DataError("line " + std::to_string(line_no) + ", column '" + header[c] +
                                "': non-numeric cell '" + std::string(cells[c]) + "'");
            if (c == target_idx)
                y = *value;
            else
                x.push_back(*value);
        }
        ds.inputs.push_back(std::move(x));
        ds.targets.push_back(y);
    }
    return ds;
}

namespace detail {

// Affine map of [lo, hi] onto [a, b]; constant columns map to 0.
inline void rescale_column(std::vector<double*>& column, double a, double b, const std::string& name) {
    if (column.empty()) return;
    double lo = *column.front(), hi = *column.front();
    for (const double* v : column) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
    }
    if (hi == lo) {
        warn("column '" + name + "' is constant; mapping it to 0");
        for (double* v : column) *v = 0.0;
        return;
    }
    const double range = hi - lo;
    for (double* v : column) *v = a + (b - a) * ((*v - lo) / range);
}

}  // namespace detail

// Min-max rescales features to [-1, 1] and targets to [0, 1] with global
// extrema, permutes rows with the seed and cuts M equal contiguous streams.
// Rows beyond M * floor(n / M) are dropped.
inline std::vector<ExampleStream> preprocess_and_partition(Dataset dataset, std::size_t clients, std::uint64_t seed) {
    const std::size_t n = dataset.rows();
    if (n == 0) throw DataError("dataset is empty");
    if (clients == 0) throw std::invalid_argument("at least one client is required");
    const std::size_t per_client = n / clients;
    if (per_client == 0)
        throw DataError("dataset has " + std::to_string(n) + " rows, fewer than the " + std::to_string(clients) +
                        " clients");

    std::vector<double*> column(n);
    for (std::size_t c = 0; c < dataset.dim(); ++c) {
        for (std::size_t r = 0; r < n; ++r) column[r] = &dataset.inputs[r][c];
        detail::rescale_column(column, -1.0, 1.0, dataset.feature_names[c]);
    }
    for (std::size_t r = 0; r < n; ++r) column[r] = &dataset.targets[r];
    detail::rescale_column(column, 0.0, 1.0, dataset.target_name);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    CounterRng rng(seed, StreamPurpose::Permutation);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);

    if (const std::size_t dropped = n - per_client * clients; dropped > 0)
        warn("partition: dropped " + std::to_string(dropped) + " trailing row(s) to give " + std::to_string(clients) +
             " streams of length " + std::to_string(per_client));

    std::vector<ExampleStream> streams(clients);
    for (std::size_t j = 0; j < clients; ++j) {
        auto& s = streams[j];
        s.inputs.reserve(per_client);
        s.targets.reserve(per_client);
        for (std::size_t t = 0; t < per_client; ++t) {
            const auto row = order[j * per_client + t];
            s.inputs.push_back(dataset.inputs[row]);
            s.targets.push_back(dataset.targets[row]);
        }
    }
    return streams;
}

// sup ||x||_2 over all streams.
inline double max_input_norm(std::span<const ExampleStream> streams) {
    double best = 0.0;
    for (const auto& s : streams)
        for (const auto& x : s.inputs) best = std::max(best, std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0)));
    return best;
}

enum class AdversaryKind { BernoulliSymmetric, BiasedArm };

struct AdversarialSpec {
    AdversaryKind kind = AdversaryKind::BiasedArm;
    std::size_t arms = 16;  // K
    std::size_t dim = 16;   // d >= K
    std::size_t horizon = 1000;
    std::size_t clients = 1;
    std::size_t subset_size = 2;           // J, enters the default bias
    std::optional<double> rho;             // default sqrt(K) / (3 sqrt(J T))
    std::optional<std::size_t> hidden_arm; // default: uniform draw from the seed
    std::uint64_t seed = 0;
};

struct AdversarialInstance {
    std::vector<ExampleStream> streams;
    std::size_t hidden_arm = 0;
    double rho = 0.0;
};

inline double default_bias(std::size_t arms, std::size_t subset_size, std::size_t horizon) {
    return std::sqrt(static_cast<double>(arms)) /
           (3.0 * std::sqrt(static_cast<double>(subset_size) * static_cast<double>(horizon)));
}

// Lower-bound constructions; every client sees the same stream.
//   BernoulliSymmetric: x = (b_1..b_K, 0..0), b_i and y fair {0,1} coins.
//   BiasedArm: y = 1; b_h = 1 w.p. (1 + rho)/2, other b_i = 1 w.p. (1 - rho)/2.
inline AdversarialInstance generate_adversarial(const AdversarialSpec& spec) {
    if (spec.arms < 2) throw std::invalid_argument("adversarial instance needs K >= 2");
    if (spec.arms > spec.dim) throw std::invalid_argument("adversarial instance needs K <= d");
    if (spec.arms > spec.horizon) throw std::invalid_argument("adversarial instance needs K <= T");
    if (spec.clients == 0) throw std::invalid_argument("at least one client is required");

    AdversarialInstance out;
    if (spec.kind == AdversaryKind::BiasedArm) {
        out.rho = spec.rho.value_or(default_bias(spec.arms, spec.subset_size, spec.horizon));
        if (!(out.rho >= 0.0 && out.rho <= 1.0)) throw std::invalid_argument("bias rho must lie in [0, 1]");
        CounterRng pick(spec.seed, StreamPurpose::Adversary, 0, ~std::uint64_t{0});
        out.hidden_arm = spec.hidden_arm.value_or(static_cast<std::size_t>(pick.below(spec.arms)));
        if (out.hidden_arm >= spec.arms) throw std::invalid_argument("hidden arm out of range");
    }

    ExampleStream s;
    s.inputs.reserve(spec.horizon);
    s.targets.reserve(spec.horizon);
    for (std::size_t t = 0; t < spec.horizon; ++t) {
        CounterRng rng(spec.seed, StreamPurpose::Adversary, 1, t);
        std::vector<double> x(spec.dim, 0.0);
        double y = 1.0;
        if (spec.kind == AdversaryKind::BernoulliSymmetric) {
            for (std::size_t i = 0; i < spec.arms; ++i) x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
            y = rng.bernoulli(0.5) ? 1.0 : 0.0;
        } else {
            for (std::size_t i = 0; i < spec.arms; ++i) {
                const double prob = i == out.hidden_arm ? 0.5 * (1.0 + out.rho) : 0.5 * (1.0 - out.rho);
                x[i] = rng.bernoulli(prob) ? 1.0 : 0.0;
            }
        }
        s.inputs.push_back(std::move(x));
        s.targets.push_back(y);
    }
    out.streams.assign(spec.clients, s);
    return out;
}

// F_i = {x -> x_i}, i < K, with the tight bounds C_i = G_i = 1 that hold
// for {0,1}-valued inputs and labels.
inline std::vector<HypothesisSpace> adversarial_spaces(AdversaryKind kind, std::size_t arms, std::size_t dim) {
    const auto loss = kind == AdversaryKind::BernoulliSymmetric ? LossKind::Absolute : LossKind::Linear;
    std::vector<HypothesisSpace> spaces;
    for (std::size_t i = 0; i < arms; ++i) {
        auto s = HypothesisSpace::basis(dim, i, loss);
        s.set_constants({1.0, 1.0});
        spaces.push_back(std::move(s));
    }
    return spaces;
}

inline LossKind adversarial_loss(AdversaryKind kind) {
    return kind == AdversaryKind::BernoulliSymmetric ? LossKind::Absolute : LossKind::Linear;
}

// i.i.d. linear regression: x = u / sqrt(d) with u ~ U[0, 1]^d, a planted
// non-negative w* with ||w*||_2 = signal_radius, y = clip(<w*, x> + noise).
// Inputs satisfy ||x||_2 <= 1; targets lie in [0, 1].
struct SyntheticLinearSpec {
    std::size_t dim = 10;
    std::size_t horizon = 1000;
    std::size_t clients = 1;
    double noise = 0.05;
    double signal_radius = 0.5;
    std::uint64_t seed = 0;
};

struct SyntheticInstance {
    std::vector<ExampleStream> streams;
    std::vector<double> planted;
};

inline SyntheticInstance generate_synthetic_linear(const SyntheticLinearSpec& spec) {
    if (spec.dim == 0 || spec.horizon == 0 || spec.clients == 0)
        throw std::invalid_argument("synthetic stream needs positive d, T and M");
    if (!(spec.noise >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
    SyntheticInstance out;
    CounterRng planted_rng(spec.seed, StreamPurpose::Data, ~std::uint64_t{0});
    out.planted.resize(spec.dim);
    for (double& w : out.planted) w = planted_rng.uniform_open();
    const double norm = std::sqrt(std::inner_product(out.planted.begin(), out.planted.end(), out.planted.begin(), 0.0));
    for (double& w : out.planted) w *= spec.signal_radius / norm;

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(spec.dim));
    out.streams.resize(spec.clients);
    for (std::size_t j = 0; j < spec.clients; ++j) {
        CounterRng rng(spec.seed, StreamPurpose::Data, j);
        auto& s = out.streams[j];
        s.inputs.reserve(spec.horizon);
        s.targets.reserve(spec.horizon);
        for (std::size_t t = 0; t < spec.horizon; ++t) {
            std::vector<double> x(spec.dim);
            for (double& v : x) v = rng.uniform() * inv_sqrt_d;
            const double clean = std::inner_product(x.begin(), x.end(), out.planted.begin(), 0.0);
            s.targets.push_back(std::clamp(clean + spec.noise * rng.normal(), 0.0, 1.0));
            s.inputs.push_back(std::move(x));
        }
    }
    return out;
}

// K nested balls {||w||_2 <= U_i} over raw inputs.
inline std::vector<HypothesisSpace> nested_linear_spaces(std::size_t dim, std::span<const double> radii,
                                                         double feature_bound, LossKind loss) {
    std::vector<HypothesisSpace> spaces;
    for (double u : radii) spaces.push_back(HypothesisSpace::linear_ball(dim, u, feature_bound, loss));
    return spaces;
}

// One Gaussian random-feature space per kernel width, boxes of radius U.
inline std::vector<HypothesisSpace> rff_spaces(std::size_t dim, std::span<const double> widths, std::size_t features,
                                               double radius, std::uint64_t seed, LossKind loss) {
    std::vector<HypothesisSpace> spaces;
    for (std::size_t i = 0; i < widths.size(); ++i)
        spaces.push_back(HypothesisSpace::rff_box(dim, widths[i], features, radius, seed, i, loss));
    return spaces;
}

}  // namespace oms
