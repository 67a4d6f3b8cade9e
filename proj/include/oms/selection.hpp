#pragma once

// Server-side subset sampling and importance-weighted estimators.
//
// A_1 ~ p, then A_2..A_J uniformly without replacement from the rest. Every
// index is observed with probability
//   P[i in O] = (K - J)/(K - 1) * p_i + (J - 1)/(K - 1),
// and dividing an observed loss (or gradient) by it gives an unbiased
// estimate of the full vector.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oms/mirror.hpp"
#include "oms/rng.hpp"

namespace oms {

inline void validate_subset_size(std::size_t k, std::size_t j) {
    if (j < 2 || j > k)
        throw std::invalid_argument("subset size J must satisfy 2 <= J <= K (got J=" + std::to_string(j) +
                                    ", K=" + std::to_string(k) + ")");
}

inline double inclusion_probability(double p_i, std::size_t k, std::size_t j) {
    const double km1 = static_cast<double>(k - 1);
    return static_cast<double>(k - j) / km1 * p_i + static_cast<double>(j - 1) / km1;
}

struct SamplingOutcome {
    std::vector<std::uint32_t> ordered_indices;  // A_1, ..., A_J
    std::vector<double> inclusion_probs;         // P[i in O] for every i in [K]

    std::uint32_t lead_index() const { return ordered_indices.front(); }
    std::size_t subset_size() const noexcept { return ordered_indices.size(); }
    std::size_t num_spaces() const noexcept { return inclusion_probs.size(); }
    bool contains(std::uint32_t i) const {
        return std::find(ordered_indices.begin(), ordered_indices.end(), i) != ordered_indices.end();
    }
};

inline std::vector<double> inclusion_probabilities(std::span<const double> p, std::size_t j) {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = inclusion_probability(p[i], p.size(), j);
    return out;
}

// Inverse-CDF draw from p (binary search over cumulative sums).
inline std::uint32_t sample_index(std::span<const double> p, CounterRng& rng) {
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    return static_cast<std::uint32_t>(std::min(idx, p.size() - 1));
}

inline SamplingOutcome sample_subset(std::span<const double> p, std::size_t j, CounterRng& rng) {
    const std::size_t k = p.size();
    validate_subset_size(k, j);
    SamplingOutcome out;
    out.ordered_indices.reserve(j);
    const std::uint32_t lead = sample_index(p, rng);
    out.ordered_indices.push_back(lead);

    // Partial Fisher-Yates over [K] \ {lead}.
    std::vector<std::uint32_t> rest;
    rest.reserve(k - 1);
    for (std::uint32_t i = 0; i < k; ++i)
        if (i != lead) rest.push_back(i);
    for (std::size_t a = 0; a + 1 < j; ++a) {
        const std::size_t pick = a + static_cast<std::size_t>(rng.below(rest.size() - a));
        std::swap(rest[a], rest[pick]);
        out.ordered_indices.push_back(rest[a]);
    }
    out.inclusion_probs = inclusion_probabilities(p, j);
    return out;
}

inline SamplingOutcome sample_subset(const SimplexPoint& p, std::size_t j, CounterRng& rng) {
    return sample_subset(p.probs(), j, rng);
}

// Sparse K-vector of reweighted losses; zero off the sampled set.
struct EstimateVector {
    std::vector<double> values;
};

namespace detail {
inline void require_observable(const SamplingOutcome& outcome, std::uint32_t i) {
    if (!(outcome.inclusion_probs.at(i) > 0.0))
        throw std::domain_error("estimator: zero inclusion probability for a sampled index");
}
}  // namespace detail

// `raw_losses[a]` is the loss of space A_{a+1}.
inline EstimateVector estimate_losses(std::span<const double> raw_losses, const SamplingOutcome& outcome) {
    if (raw_losses.size() != outcome.subset_size())
        throw std::invalid_argument("estimate_losses: one raw loss per sampled index required");
    EstimateVector out{std::vector<double>(outcome.num_spaces(), 0.0)};
    for (std::size_t a = 0; a < raw_losses.size(); ++a) {
        const auto i = outcome.ordered_indices[a];
        detail::require_observable(outcome, i);
        out.values[i] = raw_losses[a] / outcome.inclusion_probs[i];
    }
    return out;
}

// K gradient vectors; empty vectors stand for zero (unsampled spaces).
struct GradientEstimates {
    std::vector<std::vector<double>> values;

    bool is_zero(std::size_t i) const { return values[i].empty(); }
};

inline GradientEstimates estimate_gradients(std::span<const std::vector<double>> raw_gradients,
                                            const SamplingOutcome& outcome) {
    if (raw_gradients.size() != outcome.subset_size())
        throw std::invalid_argument("estimate_gradients: one raw gradient per sampled index required");
    GradientEstimates out{std::vector<std::vector<double>>(outcome.num_spaces())};
    for (std::size_t a = 0; a < raw_gradients.size(); ++a) {
        const auto i = outcome.ordered_indices[a];
        detail::require_observable(outcome, i);
        const double prob = outcome.inclusion_probs[i];
        auto& g = out.values[i];
        g.resize(raw_gradients[a].size());
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = raw_gradients[a][c] / prob;
    }
    return out;
}

}  // namespace oms
