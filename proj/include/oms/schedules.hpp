#pragma once

// Learning-rate schedules and the initial model-selection distribution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oms/log.hpp"
#include "oms/mirror.hpp"

namespace oms {

// `horizon` is T for per-round learners and R for the batched learner;
// the round argument of the schedules is then the epoch index.
struct ScheduleParams {
    std::size_t num_spaces = 1;   // K
    std::size_t subset_size = 2;  // J
    std::size_t clients = 1;      // M
    std::size_t horizon = 1;      // T (or R)

    void validate() const {
        if (subset_size < 2 || subset_size > num_spaces)
            throw std::invalid_argument("schedule: need K >= J >= 2 (K=" + std::to_string(num_spaces) +
                                        ", J=" + std::to_string(subset_size) + ")");
        if (clients == 0) throw std::invalid_argument("schedule: need M >= 1");
        if (horizon == 0) throw std::invalid_argument("schedule: need T >= 1");
    }

    // g_{K,J} = (K - J) / (J - 1)
    double exploration_ratio() const {
        return static_cast<double>(num_spaces - subset_size) / static_cast<double>(subset_size - 1);
    }

    // 1 + (K - J) / ((J - 1) M)
    double variance_factor() const { return 1.0 + exploration_ratio() / static_cast<double>(clients); }
};

//   eta = sqrt(ln(KT)) / (2 sqrt((1 + g/M) T))  min  (J - 1) / (2 (K - J))
// Constant in t. With J == K the cap is absent.
inline double eta_schedule(const ScheduleParams& params, std::size_t t) {
    params.validate();
    if (t == 0 || t > params.horizon) throw std::invalid_argument("eta_schedule: round out of range");
    const double kt = static_cast<double>(params.num_spaces) * static_cast<double>(params.horizon);
    const double main = std::sqrt(std::log(kt)) / (2.0 * std::sqrt(params.variance_factor() * params.horizon));
    if (params.subset_size == params.num_spaces) return main;
    const double cap = static_cast<double>(params.subset_size - 1) /
                       (2.0 * static_cast<double>(params.num_spaces - params.subset_size));
    return std::min(main, cap);
}

//   lambda_{t,i} = U_i / (2 G_i sqrt((1 + g/M) max(g^2, t)))
inline double lambda_schedule(const ScheduleParams& params, double radius, double lipschitz, std::size_t t) {
    params.validate();
    if (t == 0 || t > params.horizon) throw std::invalid_argument("lambda_schedule: round out of range");
    if (!(lipschitz > 0.0)) throw std::invalid_argument("lambda_schedule: G must be positive");
    const double g = params.exploration_ratio();
    const double span = std::max(g * g, static_cast<double>(t));
    return radius / (2.0 * lipschitz * std::sqrt(params.variance_factor() * span));
}

enum class InitialDistribution { Theorem, Uniform };

// p_1: mass (1 - sqrt(K/T)) shared by the spaces with the smallest loss
// bound, plus 1/sqrt(KT) everywhere. Falls back to uniform when K >= T.
inline SimplexPoint initial_distribution(std::span<const double> loss_bounds, std::size_t horizon,
                                         InitialDistribution kind = InitialDistribution::Theorem) {
    const std::size_t k = loss_bounds.size();
    if (k == 0) throw std::invalid_argument("initial_distribution: no spaces");
    if (kind == InitialDistribution::Uniform) return SimplexPoint::uniform(k);
    if (k >= horizon) {
        warn("initial distribution: K=" + std::to_string(k) + " >= T=" + std::to_string(horizon) +
             ", using the uniform distribution");
        return SimplexPoint::uniform(k);
    }
    const double smallest = *std::min_element(loss_bounds.begin(), loss_bounds.end());
    const auto minimizers =
        static_cast<std::size_t>(std::count(loss_bounds.begin(), loss_bounds.end(), smallest));
    const double kd = static_cast<double>(k);
    const double td = static_cast<double>(horizon);
    const double floor = 1.0 / std::sqrt(kd * td);
    const double bonus = (1.0 - std::sqrt(kd / td)) / static_cast<double>(minimizers);
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i) p[i] = floor + (loss_bounds[i] == smallest ? bonus : 0.0);
    return SimplexPoint(std::move(p));
}

}  // namespace oms
