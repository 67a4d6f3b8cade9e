#pragma once

// Regret of a run against a fixed comparator in one hypothesis space, and
// an offline approximation of the best comparator in hindsight.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "oms/hypotheses.hpp"
#include "oms/mirror.hpp"
#include "oms/stream.hpp"

namespace oms {

// Sum over trace rows of the lead-model loss minus the comparator's loss on
// the same (client, round) example.
inline double regret_accounting(std::span<const RoundRecord> trace, std::span<const ExampleStream> streams,
                                const LossFunction& loss, const HypothesisSpace& space,
                                std::span<const double> comparator) {
    if (comparator.size() != space.dim()) throw std::invalid_argument("comparator has the wrong dimension");
    if (!is_feasible(space.constraint(), comparator, 1e-9))
        throw std::invalid_argument("comparator is not feasible for the hypothesis space");
    double total = 0.0;
    std::vector<double> phi;
    for (const auto& rec : trace) {
        const auto& s = streams[rec.client];
        space.feature_map().featurize_into(s.inputs.at(rec.round - 1), phi);
        total += rec.loss - loss.value(predict_features(comparator, phi), s.targets[rec.round - 1]);
    }
    return total;
}

struct ComparatorFit {
    std::vector<double> parameter;
    double total_loss = 0.0;
    int steps = 0;
};

namespace detail {

inline double total_loss(const LossFunction& loss, std::span<const std::vector<double>> features,
                         std::span<const double> targets, std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t n = 0; n < features.size(); ++n) acc += loss.value(predict_features(w, features[n]), targets[n]);
    return acc;
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double top_eigenvalue(const std::vector<double>& a, std::size_t d) {
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d))), next(d);
    double value = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (std::size_t r = 0; r < d; ++r)
            next[r] = std::inner_product(v.begin(), v.end(), a.begin() + static_cast<std::ptrdiff_t>(r * d), 0.0);
        const double norm = std::sqrt(std::inner_product(next.begin(), next.end(), next.begin(), 0.0));
        if (norm == 0.0) return 0.0;
        for (std::size_t r = 0; r < d; ++r) v[r] = next[r] / norm;
        if (std::abs(norm - value) <= 1e-12 * norm) return norm;
        value = norm;
    }
    return value;
}

}  // namespace detail

// Offline projected gradient descent over the feasible set on the first
// `horizon` examples of every stream. Square loss uses the sufficient
// statistics (A = sum phi phi^T, b = sum y phi) and step 1/L; the
// non-smooth losses use projected subgradient steps U/(G sqrt(k n)) and keep
// the best iterate.
inline ComparatorFit best_comparator(std::span<const ExampleStream> streams, std::size_t horizon,
                                     const LossFunction& loss, const HypothesisSpace& space, int steps = 10000) {
    const std::size_t d = space.dim();
    std::vector<std::vector<double>> features;
    std::vector<double> targets;
    for (const auto& s : streams) {
        if (s.size() < horizon) throw std::invalid_argument("best_comparator: stream shorter than horizon");
        for (std::size_t t = 0; t < horizon; ++t) {
            features.push_back(space.feature_map().featurize(s.inputs[t]));
            targets.push_back(s.targets[t]);
        }
    }
    const auto n = static_cast<double>(targets.size());
    ComparatorFit fit{space.initial_parameter(), 0.0, 0};
    if (std::holds_alternative<FixedPoint>(space.constraint())) {
        fit.total_loss = detail::total_loss(loss, features, targets, fit.parameter);
        return fit;
    }

    std::vector<double> grad(d);
    if (loss.kind() == LossKind::Square) {
        std::vector<double> a(d * d, 0.0), b(d, 0.0);
        for (std::size_t m = 0; m < features.size(); ++m) {
            const auto& phi = features[m];
            for (std::size_t r = 0; r < d; ++r) {
                b[r] += targets[m] * phi[r];
                for (std::size_t c = 0; c < d; ++c) a[r * d + c] += phi[r] * phi[c];
            }
        }
        const double smoothness = 2.0 * detail::top_eigenvalue(a, d);
        if (smoothness > 0.0) {
            const double step = 1.0 / smoothness;
            auto& w = fit.parameter;
            for (; fit.steps < steps; ++fit.steps) {
                for (std::size_t r = 0; r < d; ++r)
                    grad[r] = 2.0 * (std::inner_product(w.begin(), w.end(), a.begin() + static_cast<std::ptrdiff_t>(r * d),
                                                        0.0) -
                                     b[r]);
                for (std::size_t r = 0; r < d; ++r) w[r] -= step * grad[r];
                project_in_place(space.constraint(), w);
            }
        }
        fit.total_loss = detail::total_loss(loss, features, targets, fit.parameter);
        return fit;
    }

    auto w = fit.parameter;
    double best = detail::total_loss(loss, features, targets, w);
    const double scale = space.radius() / (space.lipschitz_bound() * n);
    for (; fit.steps < steps; ++fit.steps) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t m = 0; m < features.size(); ++m) {
            const double slope = loss.derivative(predict_features(w, features[m]), targets[m]);
            for (std::size_t r = 0; r < d; ++r) grad[r] += slope * features[m][r];
        }
        const double step = scale / std::sqrt(static_cast<double>(fit.steps + 1));
        for (std::size_t r = 0; r < d; ++r) w[r] -= step * grad[r];
        project_in_place(space.constraint(), w);
        const double value = detail::total_loss(loss, features, targets, w);
        if (value < best) {
            best = value;
            fit.parameter = w;
        }
    }
    fit.total_loss = best;
    return fit;
}

}  // namespace oms
