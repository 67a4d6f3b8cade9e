#pragma once

// Complete online model-selection learners:
//   * FOMD-OMS, every-round communication (R = T)
//   * FOMD-OMS with intermittent communication (R < T), via run_epoch
//   * NCO-OMS, M independent single-client learners with no communication

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oms/mirror.hpp"
#include "oms/protocol.hpp"
#include "oms/schedules.hpp"
#include "oms/selection.hpp"
#include "oms/stream.hpp"

namespace oms {

enum class LearnerMode { Federated, Noncooperative };

inline std::string to_string(LearnerMode mode) {
    return mode == LearnerMode::Federated ? "federated" : "noncooperative";
}

struct LearnerConfig {
    LearnerMode mode = LearnerMode::Federated;
    ProblemSetup problem;
    std::size_t clients = 1;  // M
    std::size_t horizon = 1;  // T
    std::size_t epochs = 0;   // R; 0 means R = T
    InitialDistribution initial = InitialDistribution::Theorem;
    // Run R = T through the batched epoch machinery instead of the
    // per-round loop.
    bool force_epoch_path = false;

    std::size_t effective_epochs() const noexcept { return epochs == 0 ? horizon : epochs; }

    ScheduleParams schedule_params() const {
        const bool federated = mode == LearnerMode::Federated;
        return {problem.num_spaces(), problem.subset_size, federated ? clients : 1,
                federated ? effective_epochs() : horizon};
    }

    void validate() const {
        problem.validate();
        if (clients == 0) throw std::invalid_argument("at least one client is required");
        if (mode == LearnerMode::Noncooperative && effective_epochs() != horizon)
            throw std::invalid_argument("the noncooperative learner does not batch rounds (R must equal T)");
        EpochSchedule(horizon, effective_epochs());
        schedule_params().validate();
    }
};

struct RunArtifact {
    LearnerMode mode = LearnerMode::Federated;
    std::vector<RoundRecord> trace;
    std::vector<double> final_distribution;                 // server p (client average for NCO)
    std::vector<std::vector<double>> client_distributions;  // NCO only
    std::vector<std::vector<double>> final_models;          // server models (client 0's for NCO)
    std::uint64_t uplink_bits = 0;
    std::uint64_t downlink_bits = 0;
    std::uint64_t uplink_messages = 0;
    std::uint64_t downlink_messages = 0;
    std::size_t clients = 0;
    std::size_t horizon = 0;
    std::size_t epochs = 0;
};

namespace detail {

inline void check_streams(const LearnerConfig& config, std::span<const ExampleStream> streams) {
    if (streams.size() != config.clients)
        throw std::invalid_argument("expected " + std::to_string(config.clients) + " client streams, got " +
                                    std::to_string(streams.size()));
    for (std::size_t j = 0; j < streams.size(); ++j) {
        const auto& s = streams[j];
        if (s.size() < config.horizon || s.inputs.size() != s.targets.size())
            throw std::invalid_argument("stream of client " + std::to_string(j) + " is shorter than the horizon T=" +
                                        std::to_string(config.horizon));
        for (const auto& space : config.problem.spaces)
            if (s.dim() != space.feature_map().input_dim())
                throw std::invalid_argument("stream of client " + std::to_string(j) + " has input dimension " +
                                            std::to_string(s.dim()) + ", spaces expect " +
                                            std::to_string(space.feature_map().input_dim()));
    }
}

inline StepSizes step_sizes(const ScheduleParams& params, const ProblemSetup& problem, std::size_t t) {
    StepSizes rates{eta_schedule(params, t), {}};
    rates.lambdas.reserve(problem.num_spaces());
    for (const auto& s : problem.spaces)
        rates.lambdas.push_back(lambda_schedule(params, s.radius(), s.lipschitz_bound(), t));
    return rates;
}

inline LogSimplex starting_point(const LearnerConfig& config) {
    return LogSimplex(initial_distribution(config.problem.loss_bounds(), config.schedule_params().horizon,
                                           config.initial));
}

inline void finish(RunArtifact& out, const ServerState& state) {
    out.final_distribution = state.distribution().probabilities();
    out.final_models = state.models();
    out.uplink_bits = state.uplink_bits();
    out.downlink_bits = state.downlink_bits();
    out.uplink_messages = state.uplink_messages();
    out.downlink_messages = state.downlink_messages();
}

// Every-round protocol: sample, broadcast, predict, upload, update.
inline RunArtifact run_fomd_per_round(const LearnerConfig& config, std::span<const ExampleStream> streams,
                                      const FrameObserver* observer) {
    const auto& problem = config.problem;
    const std::size_t m = config.clients;
    const std::size_t k = problem.num_spaces();
    const auto params = config.schedule_params();
    ServerState state(problem, starting_point(config), m);

    RunArtifact out;
    out.trace.reserve(config.horizon * m);
    std::vector<SamplingOutcome> outcomes(m);
    for (std::size_t t = 1; t <= config.horizon; ++t) {
        InMemoryTransport transport(m, k, observer);
        const auto p = state.distribution().probabilities();
        std::vector<std::uint64_t> down_bits(m);
        for (std::uint32_t j = 0; j < m; ++j) {
            auto rng = problem.sampling_stream(j, t);
            outcomes[j] = sample_subset(p, problem.subset_size, rng);
            DownlinkMessage msg{static_cast<std::uint32_t>(t), j, outcomes[j].ordered_indices, {}};
            for (auto i : msg.indices) msg.parameters.push_back(state.models()[i]);
            down_bits[j] = transport.send_downlink(std::move(msg));
            state.record_downlink(down_bits[j]);
        }
        for (std::uint32_t j = 0; j < m; ++j) {
            const auto received = transport.receive_downlink(j);
            const double y = streams[j].targets[t - 1];
            auto eval = evaluate_sampled(problem, received.indices, received.parameters, streams[j].inputs[t - 1], y);
            RoundRecord rec{t, j, t, received.indices.front(), eval.lead_prediction, eval.lead_loss, y, 0,
                            down_bits[j]};
            rec.uplink_bits = transport.send_uplink(
                UplinkMessage{received.epoch, j, received.indices, std::move(eval.losses), std::move(eval.gradients)});
            state.record_uplink(rec.uplink_bits);
            out.trace.push_back(rec);
        }
        const auto reports = transport.drain_uplink();
        state.apply(problem, aggregate_reports(reports, outcomes), step_sizes(params, problem, t));
        state.finish_epoch();
    }
    finish(out, state);
    return out;
}

inline RunArtifact run_fomd_epochs(const LearnerConfig& config, std::span<const ExampleStream> streams,
                                   const FrameObserver* observer) {
    const auto& problem = config.problem;
    const EpochSchedule schedule(config.horizon, config.effective_epochs());
    const auto params = config.schedule_params();
    ServerState state(problem, starting_point(config), config.clients);

    RunArtifact out;
    out.trace.reserve(config.horizon * config.clients);
    for (std::size_t r = 1; r <= schedule.epochs(); ++r) {
        auto records = run_epoch(state, problem, streams, schedule, r, step_sizes(params, problem, r), observer);
        out.trace.insert(out.trace.end(), records.begin(), records.end());
    }
    finish(out, state);
    return out;
}

}  // namespace detail

inline RunArtifact run_fomd_oms(const LearnerConfig& config, std::span<const ExampleStream> streams,
                                const FrameObserver* observer = nullptr) {
    if (config.mode != LearnerMode::Federated) throw std::invalid_argument("run_fomd_oms: federated mode required");
    config.validate();
    detail::check_streams(config, streams);
    auto out = (config.effective_epochs() == config.horizon && !config.force_epoch_path)
                   ? detail::run_fomd_per_round(config, streams, observer)
                   : detail::run_fomd_epochs(config, streams, observer);
    out.mode = LearnerMode::Federated;
    out.clients = config.clients;
    out.horizon = config.horizon;
    out.epochs = config.effective_epochs();
    return out;
}

// Each client runs its own copy of the learner with single-client schedules
// and never communicates. Client j draws its subsets from the same stream
// the federated server uses for client j.
inline RunArtifact run_nco_oms(const LearnerConfig& config, std::span<const ExampleStream> streams) {
    if (config.mode != LearnerMode::Noncooperative)
        throw std::invalid_argument("run_nco_oms: noncooperative mode required");
    config.validate();
    detail::check_streams(config, streams);
    const auto& problem = config.problem;
    const std::size_t m = config.clients;
    const auto params = config.schedule_params();
    const auto loss_bounds = problem.loss_bounds();

    struct ClientLearner {
        LogSimplex distribution;
        std::vector<std::vector<double>> models;
    };
    std::vector<ClientLearner> learners;
    learners.reserve(m);
    const auto start = detail::starting_point(config);
    for (std::size_t j = 0; j < m; ++j) {
        ClientLearner c{start, {}};
        for (const auto& s : problem.spaces) c.models.push_back(s.initial_parameter());
        learners.push_back(std::move(c));
    }

    RunArtifact out;
    out.mode = LearnerMode::Noncooperative;
    out.trace.reserve(config.horizon * m);
    std::vector<std::vector<double>> sampled_params;
    for (std::size_t t = 1; t <= config.horizon; ++t) {
        const auto rates = detail::step_sizes(params, problem, t);
        const WeightedEntropyGeometry geometry(loss_bounds, rates.eta);
        for (std::uint32_t j = 0; j < m; ++j) {
            auto& learner = learners[j];
            auto rng = problem.sampling_stream(j, t);
            const auto outcome = sample_subset(learner.distribution.probabilities(), problem.subset_size, rng);
            sampled_params.clear();
            for (auto i : outcome.ordered_indices) sampled_params.push_back(learner.models[i]);
            const double y = streams[j].targets[t - 1];
            const auto eval =
                evaluate_sampled(problem, outcome.ordered_indices, sampled_params, streams[j].inputs[t - 1], y);
            out.trace.push_back({t, j, t, outcome.lead_index(), eval.lead_prediction, eval.lead_loss, y, 0, 0});

            const auto losses = estimate_losses(eval.losses, outcome);
            const auto grads = estimate_gradients(eval.gradients, outcome);
            learner.distribution = entropy_mirror_step(geometry, learner.distribution, losses.values).point;
            for (auto i : outcome.ordered_indices) {
                const EuclideanGeometry euclid(rates.lambdas[i], problem.spaces[i].constraint());
                learner.models[i] = euclidean_step(euclid, learner.models[i], grads.values[i]);
            }
        }
    }

    out.final_distribution.assign(problem.num_spaces(), 0.0);
    for (const auto& c : learners) {
        auto p = c.distribution.probabilities();
        for (std::size_t i = 0; i < p.size(); ++i) out.final_distribution[i] += p[i] / static_cast<double>(m);
        out.client_distributions.push_back(std::move(p));
    }
    out.final_models = learners.front().models;
    out.clients = m;
    out.horizon = config.horizon;
    out.epochs = config.horizon;
    return out;
}

inline RunArtifact run_learner(const LearnerConfig& config, std::span<const ExampleStream> streams,
                               const FrameObserver* observer = nullptr) {
    return config.mode == LearnerMode::Federated ? run_fomd_oms(config, streams, observer)
                                                 : run_nco_oms(config, streams);
}

}  // namespace oms
