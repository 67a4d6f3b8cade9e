#pragma once

// Candidate hypothesis spaces F_i = { x -> <w, phi_i(x)> : w in W_i }.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oms/mirror.hpp"
#include "oms/rng.hpp"

namespace oms {

enum class LossKind { Square, Absolute, Linear };

inline std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::Square: return "square";
        case LossKind::Absolute: return "absolute";
        case LossKind::Linear: return "linear";
    }
    return "unknown";
}

inline LossKind loss_kind_from_string(const std::string& name) {
    if (name == "square") return LossKind::Square;
    if (name == "absolute") return LossKind::Absolute;
    if (name == "linear") return LossKind::Linear;
    throw std::invalid_argument("unknown loss kind '" + name + "' (expected square, absolute or linear)");
}

// l(v, y) and its derivative in v.
class LossFunction {
public:
    explicit LossFunction(LossKind kind = LossKind::Square) : kind_(kind) {}

    LossKind kind() const noexcept { return kind_; }

    double value(double v, double y) const noexcept {
        switch (kind_) {
            case LossKind::Square: return (v - y) * (v - y);
            case LossKind::Absolute: return std::abs(v - y);
            case LossKind::Linear: return 1.0 - v * y;
        }
        return 0.0;
    }

    // Subgradient; the absolute loss uses 0 at v == y.
    double derivative(double v, double y) const noexcept {
        switch (kind_) {
            case LossKind::Square: return 2.0 * (v - y);
            case LossKind::Absolute: return v > y ? 1.0 : (v < y ? -1.0 : 0.0);
            case LossKind::Linear: return -y;
        }
        return 0.0;
    }

private:
    LossKind kind_;
};

enum class FeatureKind { Identity, Coordinate, GaussianRff };

// phi_i. Immutable after construction; random features are drawn once.
class FeatureMap {
public:
    // phi(x) = x. `bound` is sup ||x||_2 over the data domain.
    static FeatureMap identity(std::size_t dim, double bound) {
        if (dim == 0) throw std::invalid_argument("identity map needs a positive dimension");
        if (!(bound > 0.0)) throw std::invalid_argument("identity map needs a positive feature bound");
        FeatureMap m;
        m.kind_ = FeatureKind::Identity;
        m.input_dim_ = dim;
        m.output_dim_ = dim;
        m.bound_ = bound;
        return m;
    }

    // phi(x) = (x_index); |x_index| <= bound.
    static FeatureMap coordinate(std::size_t input_dim, std::size_t index, double bound = 1.0) {
        if (index >= input_dim) throw std::invalid_argument("coordinate map index out of range");
        FeatureMap m;
        m.kind_ = FeatureKind::Coordinate;
        m.input_dim_ = input_dim;
        m.output_dim_ = 1;
        m.index_ = index;
        m.bound_ = bound;
        return m;
    }

    // phi(x) = sqrt(2/D) cos(omega_j . x + b_j), omega_j ~ N(0, width^-2 I),
    // b_j ~ U[0, 2 pi]. Approximates exp(-||x - v||^2 / (2 width^2)).
    static FeatureMap gaussian_rff(std::size_t input_dim, double width, std::size_t features, std::uint64_t seed,
                                   std::uint64_t stream = 0) {
        if (input_dim == 0 || features == 0) throw std::invalid_argument("random features need positive dimensions");
        if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("kernel width must be positive");
        FeatureMap m;
        m.kind_ = FeatureKind::GaussianRff;
        m.input_dim_ = input_dim;
        m.output_dim_ = features;
        m.width_ = width;
        m.bound_ = std::numbers::sqrt2;
        auto spectral = std::make_shared<Spectral>();
        spectral->omega.resize(features * input_dim);
        spectral->phase.resize(features);
        CounterRng rng(seed, StreamPurpose::Features, stream);
        for (double& w : spectral->omega) w = rng.normal() / width;
        for (double& b : spectral->phase) b = 2.0 * std::numbers::pi * rng.uniform();
        m.spectral_ = std::move(spectral);
        return m;
    }

    FeatureKind kind() const noexcept { return kind_; }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }
    double bound() const noexcept { return bound_; }
    double width() const noexcept { return width_; }
    std::size_t coordinate_index() const noexcept { return index_; }

    void featurize_into(std::span<const double> x, std::vector<double>& out) const {
        if (x.size() != input_dim_)
            throw std::invalid_argument("featurize: input has dimension " + std::to_string(x.size()) + ", expected " +
                                        std::to_string(input_dim_));
        out.resize(output_dim_);
        switch (kind_) {
            case FeatureKind::Identity: std::copy(x.begin(), x.end(), out.begin()); break;
            case FeatureKind::Coordinate: out[0] = x[index_]; break;
            case FeatureKind::GaussianRff: {
                const double scale = std::sqrt(2.0 / static_cast<double>(output_dim_));
                const double* omega = spectral_->omega.data();
                for (std::size_t j = 0; j < output_dim_; ++j, omega += input_dim_) {
                    const double proj = std::inner_product(x.begin(), x.end(), omega, spectral_->phase[j]);
                    out[j] = scale * std::cos(proj);
                }
                break;
            }
        }
    }

    std::vector<double> featurize(std::span<const double> x) const {
        std::vector<double> out;
        featurize_into(x, out);
        return out;
    }

private:
    struct Spectral {
        std::vector<double> omega;  // row-major, output_dim x input_dim
        std::vector<double> phase;
    };

    FeatureMap() = default;

    FeatureKind kind_ = FeatureKind::Identity;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    std::size_t index_ = 0;
    double bound_ = 1.0;
    double width_ = 0.0;
    std::shared_ptr<const Spectral> spectral_;
};

// Loss bound C_i and gradient-norm bound G_i for a space with parameter
// radius U and feature bound b, assuming targets in [0, 1] (|y| <= 1 for
// the linear loss).
struct SpaceConstants {
    double loss_bound;
    double lipschitz_bound;
};

inline SpaceConstants default_constants(LossKind loss, double radius, double feature_bound) {
    const double reach = radius * feature_bound;  // sup |<w, phi(x)>|
    switch (loss) {
        case LossKind::Square: return {(reach + 1.0) * (reach + 1.0), 2.0 * (reach + 1.0) * feature_bound};
        case LossKind::Absolute: return {reach + 1.0, feature_bound};
        case LossKind::Linear: return {1.0 + reach, feature_bound};
    }
    return {1.0, 1.0};
}

class HypothesisSpace {
public:
    HypothesisSpace(FeatureMap map, Constraint constraint, double radius, SpaceConstants constants)
        : map_(std::move(map)), constraint_(std::move(constraint)), radius_(radius), constants_(constants) {
        validate_constraint(constraint_);
        if (!(radius_ >= 0.0) || !std::isfinite(radius_)) throw std::invalid_argument("space radius must be >= 0");
        if (!(constants_.loss_bound > 0.0) || !(constants_.lipschitz_bound > 0.0))
            throw std::invalid_argument("loss and lipschitz bounds must be positive");
        if (const auto* fixed = std::get_if<FixedPoint>(&constraint_); fixed && fixed->point.size() != map_.output_dim())
            throw std::invalid_argument("fixed hypothesis has the wrong dimension");
    }

    // {<w, x> : ||w||_2 <= U}
    static HypothesisSpace linear_ball(std::size_t dim, double radius, double feature_bound, LossKind loss) {
        return {FeatureMap::identity(dim, feature_bound), L2Ball{radius}, radius,
                default_constants(loss, radius, feature_bound)};
    }

    // Random-feature space restricted to ||w||_inf <= U / sqrt(D).
    static HypothesisSpace rff_box(std::size_t input_dim, double width, std::size_t features, double radius,
                                   std::uint64_t seed, std::uint64_t stream, LossKind loss) {
        auto map = FeatureMap::gaussian_rff(input_dim, width, features, seed, stream);
        const double half_width = radius / std::sqrt(static_cast<double>(features));
        const double bound = map.bound();
        return {std::move(map), InfBox{half_width}, radius, default_constants(loss, radius, bound)};
    }

    // The single function f(x) = x_index.
    static HypothesisSpace basis(std::size_t input_dim, std::size_t index, LossKind loss) {
        return {FeatureMap::coordinate(input_dim, index), FixedPoint{{1.0}}, 1.0, default_constants(loss, 1.0, 1.0)};
    }

    const FeatureMap& feature_map() const noexcept { return map_; }
    const Constraint& constraint() const noexcept { return constraint_; }
    double radius() const noexcept { return radius_; }
    double loss_bound() const noexcept { return constants_.loss_bound; }
    double lipschitz_bound() const noexcept { return constants_.lipschitz_bound; }
    std::size_t dim() const noexcept { return map_.output_dim(); }

    void set_constants(SpaceConstants c) {
        if (!(c.loss_bound > 0.0) || !(c.lipschitz_bound > 0.0))
            throw std::invalid_argument("loss and lipschitz bounds must be positive");
        constants_ = c;
    }

    // Starting parameter: zero, or the fixed point for singleton spaces.
    std::vector<double> initial_parameter() const {
        if (const auto* fixed = std::get_if<FixedPoint>(&constraint_)) return fixed->point;
        return std::vector<double>(dim(), 0.0);
    }

private:
    FeatureMap map_;
    Constraint constraint_;
    double radius_;
    SpaceConstants constants_;
};

inline double predict_features(std::span<const double> w, std::span<const double> features) {
    if (w.size() != features.size()) throw std::invalid_argument("predict: parameter/feature dimension mismatch");
    return std::inner_product(w.begin(), w.end(), features.begin(), 0.0);
}

inline double predict(const HypothesisSpace& space, std::span<const double> w, std::span<const double> x) {
    const auto phi = space.feature_map().featurize(x);
    return predict_features(w, phi);
}

struct LossGradient {
    double value = 0.0;
    double prediction = 0.0;
    std::vector<double> gradient;
};

// Loss and gradient with respect to w for precomputed features.
inline LossGradient loss_and_gradient_features(const LossFunction& loss, std::span<const double> w,
                                               std::span<const double> features, double y) {
    LossGradient out;
    out.prediction = predict_features(w, features);
    out.value = loss.value(out.prediction, y);
    const double slope = loss.derivative(out.prediction, y);
    out.gradient.resize(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) out.gradient[i] = slope * features[i];
    if (!std::isfinite(out.value)) throw std::invalid_argument("loss is not finite");
    return out;
}

inline LossGradient loss_and_gradient(const LossFunction& loss, const HypothesisSpace& space,
                                      std::span<const double> w, std::span<const double> x, double y) {
    detail::require_finite(w, "parameter vector");
    detail::require_finite(x, "input");
    if (!std::isfinite(y)) throw std::invalid_argument("label is not finite");
    const auto phi = space.feature_map().featurize(x);
    return loss_and_gradient_features(loss, w, phi, y);
}

// Kernel widths 2^{i-2}, i = 1..count.
inline std::vector<double> omkl_kernel_widths(std::size_t count = 8) {
    std::vector<double> widths(count);
    for (std::size_t i = 0; i < count; ++i) widths[i] = std::ldexp(1.0, static_cast<int>(i) - 1);
    return widths;
}

}  // namespace oms
