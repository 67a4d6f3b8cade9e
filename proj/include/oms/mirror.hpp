#pragma once

// Bregman-geometry primitives: the weighted negative entropy over the
// simplex (used for the model-selection distribution) and the Euclidean
// regularizer over norm-bounded parameter sets (used for the hypotheses).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace oms {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " contains a non-finite value");
    }
}

inline double log_sum_exp(std::span<const double> v) {
    const double hi = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

}  // namespace detail

// A point in the open simplex. Coordinates in (0, 1], summing to one.
class SimplexPoint {
public:
    static constexpr double kSumTolerance = 1e-9;

    explicit SimplexPoint(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw std::invalid_argument("simplex point must have at least one coordinate");
        double total = 0.0;
        for (double p : probs_) {
            if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("simplex coordinate outside (0, 1]");
            total += p;
        }
        if (std::abs(total - 1.0) > kSumTolerance) throw std::invalid_argument("simplex coordinates do not sum to 1");
    }

    static SimplexPoint uniform(std::size_t k) { return SimplexPoint(std::vector<double>(k, 1.0 / static_cast<double>(k))); }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
};

// Simplex point stored as normalized log-probabilities. Repeated
// exponentiated updates over long horizons underflow in linear space.
class LogSimplex {
public:
    // exp(kLogFloor) == 1e-300, the smallest probability a coordinate may take.
    static constexpr double kProbabilityFloor = 1e-300;

    explicit LogSimplex(const SimplexPoint& p) : logp_(p.size()) {
        std::transform(p.probs().begin(), p.probs().end(), logp_.begin(), [](double x) { return std::log(x); });
        normalize();
    }

    // From unnormalized log-weights.
    static LogSimplex from_log_weights(std::vector<double> logw) {
        detail::require_finite(logw, "log weights");
        LogSimplex out;
        out.logp_ = std::move(logw);
        out.normalize();
        return out;
    }

    std::size_t size() const noexcept { return logp_.size(); }
    std::span<const double> log_probs() const noexcept { return logp_; }

    std::vector<double> probabilities() const {
        std::vector<double> p(logp_.size());
        std::transform(logp_.begin(), logp_.end(), p.begin(), [](double x) { return std::exp(x); });
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& x : p) x /= total;
        return p;
    }

    SimplexPoint point() const { return SimplexPoint(probabilities()); }

private:
    LogSimplex() = default;

    void normalize() {
        const double lse = detail::log_sum_exp(logp_);
        const double log_floor = std::log(kProbabilityFloor);
        // Floor after normalizing; the added mass is below K * 1e-300.
        for (double& x : logp_) x = std::max(x - lse, log_floor);
    }

    std::vector<double> logp_;
};

// psi(p) = sum_i (C_i / eta) p_i ln p_i
class WeightedEntropyGeometry {
public:
    WeightedEntropyGeometry(std::vector<double> scales, double learning_rate)
        : scales_(std::move(scales)), learning_rate_(learning_rate) {
        if (scales_.empty()) throw std::invalid_argument("entropy geometry needs at least one scale");
        for (double c : scales_) {
            if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("entropy scales must be positive and finite");
        }
        if (!(learning_rate_ > 0.0) || !std::isfinite(learning_rate_))
            throw std::invalid_argument("entropy learning rate must be positive");
    }

    std::span<const double> scales() const noexcept { return scales_; }
    double learning_rate() const noexcept { return learning_rate_; }
    std::size_t size() const noexcept { return scales_.size(); }

private:
    std::vector<double> scales_;
    double learning_rate_;
};

// D(p, q) = (1/eta) sum_i C_i (p_i ln(p_i/q_i) + q_i - p_i)
inline double bregman_divergence_entropy(const WeightedEntropyGeometry& geometry, std::span<const double> p,
                                         std::span<const double> q) {
    if (p.size() != geometry.size() || q.size() != geometry.size())
        throw std::invalid_argument("bregman divergence: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw std::domain_error("bregman divergence: negative coordinate");
        double term = q[i] - p[i];
        if (p[i] > 0.0) {
            if (q[i] == 0.0) throw std::domain_error("bregman divergence: q_i = 0 where p_i > 0");
            term += p[i] * std::log(p[i] / q[i]);
        }
        total += geometry.scales()[i] * term;
    }
    return std::max(0.0, total / geometry.learning_rate());
}

inline double bregman_divergence_entropy(const WeightedEntropyGeometry& geometry, const SimplexPoint& p,
                                         const SimplexPoint& q) {
    return bregman_divergence_entropy(geometry, p.probs(), q.probs());
}

struct EntropyStep {
    LogSimplex point;
    double multiplier = 0.0;  // lambda*, the simplex Lagrange multiplier
    int iterations = 0;
};

// One mirror step followed by the Bregman projection back onto the simplex:
//   p'_i = p_i exp(-eta (lambda* + c_i) / C_i),   sum_i p'_i = 1.
// The left side is non-increasing in lambda, so lambda* is bracketed by
// [-max_i c_i, -min_i c_i] (a subset of [-max_i c_i, 0] for non-negative
// losses) and found by bisection.
inline EntropyStep entropy_mirror_step(const WeightedEntropyGeometry& geometry, const LogSimplex& p,
                                       std::span<const double> loss) {
    constexpr double kTolerance = 1e-12;
    constexpr int kMaxIterations = 200;

    const std::size_t k = geometry.size();
    if (p.size() != k || loss.size() != k) throw std::invalid_argument("entropy step: dimension mismatch");
    detail::require_finite(loss, "loss vector");

    const auto [min_it, max_it] = std::minmax_element(loss.begin(), loss.end());
    const double lo_loss = *min_it;
    const double hi_loss = *max_it;
    if (lo_loss == hi_loss) {
        // Every coordinate moves by the same factor; the projection undoes it.
        return {p, -lo_loss, 0};
    }

    const double eta = geometry.learning_rate();
    const auto scales = geometry.scales();
    const auto logp = p.log_probs();
    std::vector<double> shifted(k);
    auto log_mass = [&](double lambda) {
        for (std::size_t i = 0; i < k; ++i) shifted[i] = logp[i] - eta * (lambda + loss[i]) / scales[i];
        return detail::log_sum_exp(shifted);
    };

    double lo = -hi_loss;  // mass >= 1
    double hi = -lo_loss;  // mass <= 1
    double lambda = 0.5 * (lo + hi);
    int iter = 0;
    for (;; ++iter) {
        if (iter >= kMaxIterations)
            throw ConvergenceError("entropy step: bisection did not reach |sum p - 1| <= 1e-12 within 200 iterations");
        lambda = 0.5 * (lo + hi);
        const double log_sum = log_mass(lambda);
        if (std::abs(std::expm1(log_sum)) <= kTolerance) break;
        if (log_sum > 0.0)
            lo = lambda;
        else
            hi = lambda;
    }
    return {LogSimplex::from_log_weights(shifted), lambda, iter + 1};
}

inline SimplexPoint entropy_mirror_step(const WeightedEntropyGeometry& geometry, const SimplexPoint& p,
                                        std::span<const double> loss) {
    return entropy_mirror_step(geometry, LogSimplex(p), loss).point.point();
}

// Feasible sets for the hypothesis parameters.
struct L2Ball {
    double radius;
};
struct InfBox {
    double half_width;
};
// A singleton set: the hypothesis is a fixed function and never moves.
struct FixedPoint {
    std::vector<double> point;
};
using Constraint = std::variant<L2Ball, InfBox, FixedPoint>;

inline void validate_constraint(const Constraint& c) {
    std::visit(
        [](const auto& set) {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, L2Ball>) {
                if (!(set.radius > 0.0) || !std::isfinite(set.radius))
                    throw std::invalid_argument("L2 ball radius must be positive");
            } else if constexpr (std::is_same_v<T, InfBox>) {
                if (!(set.half_width > 0.0) || !std::isfinite(set.half_width))
                    throw std::invalid_argument("box half-width must be positive");
            } else {
                detail::require_finite(set.point, "fixed point");
            }
        },
        c);
}

inline void project_in_place(const Constraint& constraint, std::vector<double>& w) {
    std::visit(
        [&w](const auto& set) {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, L2Ball>) {
                const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
                if (norm > set.radius) {
                    const double scale = set.radius / norm;
                    for (double& x : w) x *= scale;
                }
            } else if constexpr (std::is_same_v<T, InfBox>) {
                for (double& x : w) x = std::clamp(x, -set.half_width, set.half_width);
            } else {
                w = set.point;
            }
        },
        constraint);
}

inline std::vector<double> project(const Constraint& constraint, std::vector<double> w) {
    project_in_place(constraint, w);
    return w;
}

inline bool is_feasible(const Constraint& constraint, std::span<const double> w, double tol = 1e-12) {
    return std::visit(
        [&](const auto& set) {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, L2Ball>) {
                const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
                return norm <= set.radius * (1.0 + tol);
            } else if constexpr (std::is_same_v<T, InfBox>) {
                return std::all_of(w.begin(), w.end(),
                                   [&](double x) { return std::abs(x) <= set.half_width * (1.0 + tol); });
            } else {
                return std::equal(w.begin(), w.end(), set.point.begin(), set.point.end());
            }
        },
        constraint);
}

// psi(w) = ||w||^2 / (2 lambda); the mirror step is a plain gradient step.
class EuclideanGeometry {
public:
    EuclideanGeometry(double learning_rate, Constraint constraint)
        : learning_rate_(learning_rate), constraint_(std::move(constraint)) {
        if (!(learning_rate_ > 0.0) || !std::isfinite(learning_rate_))
            throw std::invalid_argument("euclidean learning rate must be positive");
        validate_constraint(constraint_);
    }

    double learning_rate() const noexcept { return learning_rate_; }
    const Constraint& constraint() const noexcept { return constraint_; }

private:
    double learning_rate_;
    Constraint constraint_;
};

// Projected gradient step w <- Proj(w - lambda * g). A zero gradient leaves
// w untouched.
inline std::vector<double> euclidean_step(const EuclideanGeometry& geometry, std::span<const double> w,
                                          std::span<const double> gradient) {
    if (w.size() != gradient.size()) throw std::invalid_argument("euclidean step: dimension mismatch");
    detail::require_finite(w, "parameter vector");
    detail::require_finite(gradient, "gradient");
    std::vector<double> out(w.begin(), w.end());
    if (std::all_of(gradient.begin(), gradient.end(), [](double g) { return g == 0.0; })) return out;
    const double rate = geometry.learning_rate();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rate * gradient[i];
    project_in_place(geometry.constraint(), out);
    return out;
}

}  // namespace oms
