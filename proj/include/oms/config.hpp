#pragma once

// Experiment configuration: JSON parsing and cross-field validation.
// The schema is documented in README.md.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "oms/data.hpp"
#include "oms/hypotheses.hpp"
#include "oms/learners.hpp"
#include "oms/schedules.hpp"

namespace oms {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)), message_(message) {}
    const std::string& field() const noexcept { return field_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string field_;
    std::string message_;
};

enum class DatasetKind { Csv, SyntheticLinear, Adversarial };
enum class SpacesKind { NestedLinear, Rff, Basis };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::SyntheticLinear;
    // csv
    std::string path;
    std::string target_column;
    // generators
    std::size_t dim = 10;
    double noise = 0.05;
    double signal_radius = 0.5;
    AdversaryKind adversary = AdversaryKind::BiasedArm;
    std::size_t arms = 0;
    std::optional<double> rho;
    std::optional<std::size_t> hidden_arm;
};

struct SpacesConfig {
    SpacesKind kind = SpacesKind::NestedLinear;
    std::vector<double> radii;            // nested_linear
    std::optional<double> feature_bound;  // nested_linear; default sup ||x|| of the data
    std::vector<double> widths;           // rff
    std::size_t features = 100;           // rff, D
    double radius = 1.0;                  // rff, U
    std::vector<double> loss_bounds;      // optional per-space C override
    std::vector<double> lipschitz_bounds; // optional per-space G override
};

struct ExperimentConfig {
    DatasetConfig dataset;
    SpacesConfig spaces;
    std::size_t clients = 1;
    std::optional<std::size_t> horizon;  // required for generators
    std::optional<std::size_t> epochs;   // default R = T
    std::size_t subset_size = 2;
    LearnerMode mode = LearnerMode::Federated;
    std::optional<LossKind> loss;
    InitialDistribution initial = InitialDistribution::Theorem;
    std::uint64_t seed = 0;
    std::size_t repetitions = 1;
    bool check_bounds = true;
    bool compute_regret = false;
    int comparator_steps = 2000;
    std::string output_dir = "oms-out";

    std::size_t num_spaces() const {
        switch (spaces.kind) {
            case SpacesKind::NestedLinear: return spaces.radii.size();
            case SpacesKind::Rff: return spaces.widths.size();
            case SpacesKind::Basis: return dataset.arms;
        }
        return 0;
    }

    LossKind effective_loss() const {
        if (dataset.kind == DatasetKind::Adversarial) return adversarial_loss(dataset.adversary);
        return loss.value_or(LossKind::Square);
    }
};

namespace detail {

using nlohmann::json;

inline const json* field(const json& obj, const std::string& key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline std::size_t get_count(const json& obj, const std::string& key, const std::string& path) {
    const auto* v = field(obj, key);
    if (!v) throw ConfigError(path, "required field is missing");
    if (!v->is_number_integer() || v->get<long long>() < 0)
        throw ConfigError(path, "must be a non-negative integer");
    return v->get<std::size_t>();
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "must be a number");
    return v.get<double>();
}

inline std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "must be a string");
    return v.get<std::string>();
}

inline std::vector<double> get_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
    }
}

inline DatasetConfig parse_dataset(const json& j) {
    if (!j.is_object()) throw ConfigError("dataset", "must be an object");
    DatasetConfig d;
    const auto* kind = field(j, "kind");
    if (!kind) throw ConfigError("dataset.kind", "required field is missing");
    const auto k = get_string(*kind, "dataset.kind");
    if (k == "csv") {
        reject_unknown(j, {"kind", "path", "target_column"}, "dataset");
        d.kind = DatasetKind::Csv;
        const auto* p = field(j, "path");
        const auto* t = field(j, "target_column");
        if (!p) throw ConfigError("dataset.path", "required field is missing");
        if (!t) throw ConfigError("dataset.target_column", "required field is missing");
        d.path = get_string(*p, "dataset.path");
        d.target_column = get_string(*t, "dataset.target_column");
    } else if (k == "synthetic_linear") {
        reject_unknown(j, {"kind", "dim", "noise", "signal_radius"}, "dataset");
        d.kind = DatasetKind::SyntheticLinear;
        if (field(j, "dim")) d.dim = get_count(j, "dim", "dataset.dim");
        if (const auto* v = field(j, "noise")) d.noise = get_number(*v, "dataset.noise");
        if (const auto* v = field(j, "signal_radius")) d.signal_radius = get_number(*v, "dataset.signal_radius");
        if (d.dim == 0) throw ConfigError("dataset.dim", "must be positive");
        if (!(d.noise >= 0.0)) throw ConfigError("dataset.noise", "must be non-negative");
    } else if (k == "adversarial") {
        reject_unknown(j, {"kind", "case", "arms", "dim", "rho", "hidden_arm"}, "dataset");
        d.kind = DatasetKind::Adversarial;
        const auto* c = field(j, "case");
        if (!c) throw ConfigError("dataset.case", "required field is missing");
        const auto cs = get_string(*c, "dataset.case");
        if (cs == "bernoulli_symmetric")
            d.adversary = AdversaryKind::BernoulliSymmetric;
        else if (cs == "biased_arm")
            d.adversary = AdversaryKind::BiasedArm;
        else
            throw ConfigError("dataset.case", "must be 'bernoulli_symmetric' or 'biased_arm'");
        d.arms = get_count(j, "arms", "dataset.arms");
        d.dim = field(j, "dim") ? get_count(j, "dim", "dataset.dim") : d.arms;
        if (const auto* v = field(j, "rho")) {
            d.rho = get_number(*v, "dataset.rho");
            if (!(*d.rho >= 0.0 && *d.rho <= 1.0)) throw ConfigError("dataset.rho", "must lie in [0, 1]");
        }
        if (field(j, "hidden_arm")) d.hidden_arm = get_count(j, "hidden_arm", "dataset.hidden_arm");
        if (d.arms > d.dim) throw ConfigError("dataset.arms", "K must not exceed d");
        if (d.hidden_arm && *d.hidden_arm >= d.arms) throw ConfigError("dataset.hidden_arm", "must be below K");
    } else {
        throw ConfigError("dataset.kind", "must be 'csv', 'synthetic_linear' or 'adversarial'");
    }
    return d;
}

inline SpacesConfig parse_spaces(const json& j) {
    if (!j.is_object()) throw ConfigError("spaces", "must be an object");
    reject_unknown(j, {"kind", "radii", "feature_bound", "widths", "features", "radius", "loss_bounds", "lipschitz_bounds"},
                   "spaces");
    SpacesConfig s;
    const auto* kind = field(j, "kind");
    if (!kind) throw ConfigError("spaces.kind", "required field is missing");
    const auto k = get_string(*kind, "spaces.kind");
    if (k == "nested_linear") {
        s.kind = SpacesKind::NestedLinear;
        const auto* r = field(j, "radii");
        if (!r) throw ConfigError("spaces.radii", "required field is missing");
        s.radii = get_numbers(*r, "spaces.radii");
        for (double u : s.radii)
            if (!(u > 0.0)) throw ConfigError("spaces.radii", "every radius must be positive");
        if (const auto* b = field(j, "feature_bound")) {
            s.feature_bound = get_number(*b, "spaces.feature_bound");
            if (!(*s.feature_bound > 0.0)) throw ConfigError("spaces.feature_bound", "must be positive");
        }
    } else if (k == "rff") {
        s.kind = SpacesKind::Rff;
        s.widths = field(j, "widths") ? get_numbers(j["widths"], "spaces.widths") : omkl_kernel_widths();
        for (double w : s.widths)
            if (!(w > 0.0)) throw ConfigError("spaces.widths", "every kernel width must be positive");
        if (field(j, "features")) s.features = get_count(j, "features", "spaces.features");
        if (s.features == 0) throw ConfigError("spaces.features", "must be positive");
        if (const auto* v = field(j, "radius")) s.radius = get_number(*v, "spaces.radius");
        if (!(s.radius > 0.0)) throw ConfigError("spaces.radius", "must be positive");
    } else if (k == "basis") {
        s.kind = SpacesKind::Basis;
    } else {
        throw ConfigError("spaces.kind", "must be 'nested_linear', 'rff' or 'basis'");
    }
    if (const auto* v = field(j, "loss_bounds")) s.loss_bounds = get_numbers(*v, "spaces.loss_bounds");
    if (const auto* v = field(j, "lipschitz_bounds")) s.lipschitz_bounds = get_numbers(*v, "spaces.lipschitz_bounds");
    return s;
}

}  // namespace detail

// Parses and validates everything that does not need the data itself.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::field;
    if (!j.is_object()) throw ConfigError("$", "configuration must be a JSON object");
    detail::reject_unknown(j,
                           {"schema_version", "dataset", "spaces", "clients", "horizon", "epochs", "subset_size", "mode",
                            "loss", "initial_distribution", "seed", "repetitions", "check_bounds", "compute_regret",
                            "comparator_steps", "output_dir"},
                           "");
    if (const auto* v = field(j, "schema_version"); v && (!v->is_number_integer() || v->get<int>() != kConfigSchemaVersion))
        throw ConfigError("schema_version", "unsupported schema version (expected " +
                                                std::to_string(kConfigSchemaVersion) + ")");
    ExperimentConfig c;
    const auto* ds = field(j, "dataset");
    if (!ds) throw ConfigError("dataset", "required field is missing");
    c.dataset = detail::parse_dataset(*ds);
    const auto* sp = field(j, "spaces");
    if (!sp) throw ConfigError("spaces", "required field is missing");
    c.spaces = detail::parse_spaces(*sp);

    c.clients = detail::get_count(j, "clients", "clients");
    if (c.clients == 0) throw ConfigError("clients", "M must be at least 1");
    if (field(j, "horizon")) c.horizon = detail::get_count(j, "horizon", "horizon");
    if (field(j, "epochs")) c.epochs = detail::get_count(j, "epochs", "epochs");
    c.subset_size = detail::get_count(j, "subset_size", "subset_size");
    if (const auto* v = field(j, "mode")) {
        const auto m = detail::get_string(*v, "mode");
        if (m == "federated")
            c.mode = LearnerMode::Federated;
        else if (m == "noncooperative")
            c.mode = LearnerMode::Noncooperative;
        else
            throw ConfigError("mode", "must be 'federated' or 'noncooperative'");
    }
    if (const auto* v = field(j, "loss")) {
        try {
            c.loss = loss_kind_from_string(detail::get_string(*v, "loss"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("loss", e.what());
        }
    }
    if (const auto* v = field(j, "initial_distribution")) {
        const auto s = detail::get_string(*v, "initial_distribution");
        if (s == "theorem")
            c.initial = InitialDistribution::Theorem;
        else if (s == "uniform")
            c.initial = InitialDistribution::Uniform;
        else
            throw ConfigError("initial_distribution", "must be 'theorem' or 'uniform'");
    }
    if (field(j, "seed")) c.seed = detail::get_count(j, "seed", "seed");
    if (field(j, "repetitions")) c.repetitions = detail::get_count(j, "repetitions", "repetitions");
    if (c.repetitions == 0) throw ConfigError("repetitions", "must be at least 1");
    if (const auto* v = field(j, "check_bounds")) {
        if (!v->is_boolean()) throw ConfigError("check_bounds", "must be a boolean");
        c.check_bounds = v->get<bool>();
    }
    if (const auto* v = field(j, "compute_regret")) {
        if (!v->is_boolean()) throw ConfigError("compute_regret", "must be a boolean");
        c.compute_regret = v->get<bool>();
    }
    if (field(j, "comparator_steps"))
        c.comparator_steps = static_cast<int>(detail::get_count(j, "comparator_steps", "comparator_steps"));
    if (const auto* v = field(j, "output_dir")) c.output_dir = detail::get_string(*v, "output_dir");

    // Cross-field constraints.
    const bool adversarial = c.dataset.kind == DatasetKind::Adversarial;
    if ((c.spaces.kind == SpacesKind::Basis) != adversarial)
        throw ConfigError("spaces.kind", "'basis' spaces go together with an adversarial dataset");
    if (adversarial && c.loss && *c.loss != adversarial_loss(c.dataset.adversary))
        throw ConfigError("loss", "the adversarial case fixes the loss to '" +
                                      to_string(adversarial_loss(c.dataset.adversary)) + "'");
    const std::size_t k = c.num_spaces();
    if (k == 0) throw ConfigError("spaces", "at least one hypothesis space is required");
    if (c.subset_size < 2) throw ConfigError("subset_size", "J >= 2 is required (got J=" + std::to_string(c.subset_size) + ")");
    if (c.subset_size > k)
        throw ConfigError("subset_size", "J <= K is required (got J=" + std::to_string(c.subset_size) +
                                             ", K=" + std::to_string(k) + ")");
    if (!c.spaces.loss_bounds.empty() && c.spaces.loss_bounds.size() != k)
        throw ConfigError("spaces.loss_bounds", "needs one entry per space");
    if (!c.spaces.lipschitz_bounds.empty() && c.spaces.lipschitz_bounds.size() != k)
        throw ConfigError("spaces.lipschitz_bounds", "needs one entry per space");
    if (c.dataset.kind != DatasetKind::Csv && !c.horizon)
        throw ConfigError("horizon", "required for generated datasets");
    if (c.horizon) {
        if (*c.horizon == 0) throw ConfigError("horizon", "T must be at least 1");
        if (c.epochs) {
            if (*c.epochs == 0 || *c.horizon % *c.epochs != 0)
                throw ConfigError("epochs", "R must divide T (T=" + std::to_string(*c.horizon) +
                                                ", R=" + std::to_string(*c.epochs) + ")");
        }
        if (adversarial && c.dataset.arms > *c.horizon) throw ConfigError("dataset.arms", "K must not exceed T");
    }
    if (c.mode == LearnerMode::Noncooperative && c.epochs && c.horizon && *c.epochs != *c.horizon)
        throw ConfigError("epochs", "the noncooperative learner requires R = T");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open configuration '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("$", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace oms
