#pragma once

// Server/client message model with intermittent communication.
//
// [T] is cut into R epochs of N = T / R rounds. At the first round of an
// epoch the server samples each client's subset and ships the sampled
// models; clients then predict with the lead model for N rounds while
// accumulating raw losses and gradients of all sampled models; at the last
// round they upload epoch averages, and the server reweights, averages over
// clients and takes one mirror step on p and on every w_i. Clients never
// update locally, so every client always holds the server's broadcast copy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oms/hypotheses.hpp"
#include "oms/mirror.hpp"
#include "oms/rng.hpp"
#include "oms/selection.hpp"
#include "oms/stream.hpp"
#include "oms/wire.hpp"

namespace oms {

// A realized loss or gradient norm exceeded the space's declared bound.
class BoundViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EpochSchedule {
public:
    EpochSchedule(std::size_t horizon, std::size_t epochs) : horizon_(horizon), epochs_(epochs) {
        if (horizon_ == 0) throw std::invalid_argument("horizon T must be positive");
        if (epochs_ == 0 || epochs_ > horizon_) throw std::invalid_argument("epoch count R must satisfy 1 <= R <= T");
        if (horizon_ % epochs_ != 0)
            throw std::invalid_argument("horizon T=" + std::to_string(horizon_) +
                                        " is not divisible by the epoch count R=" + std::to_string(epochs_));
    }

    std::size_t horizon() const noexcept { return horizon_; }
    std::size_t epochs() const noexcept { return epochs_; }
    std::size_t length() const noexcept { return horizon_ / epochs_; }
    // Rounds are 1-based: T_r = {(r-1)N + 1, ..., rN}.
    std::size_t first_round(std::size_t r) const noexcept { return (r - 1) * length() + 1; }
    std::size_t last_round(std::size_t r) const noexcept { return r * length(); }
    std::size_t epoch_of(std::size_t t) const noexcept { return (t - 1) / length() + 1; }

private:
    std::size_t horizon_;
    std::size_t epochs_;
};

// Read-only description of the learning problem shared by server and clients.
struct ProblemSetup {
    std::vector<HypothesisSpace> spaces;
    LossFunction loss;
    std::size_t subset_size = 2;  // J
    std::uint64_t seed = 0;
    bool check_bounds = true;
    // All clients draw their subsets from client 0's stream.
    bool shared_sampling_stream = false;

    std::size_t num_spaces() const noexcept { return spaces.size(); }

    std::vector<double> loss_bounds() const {
        std::vector<double> c(spaces.size());
        std::transform(spaces.begin(), spaces.end(), c.begin(), [](const auto& s) { return s.loss_bound(); });
        return c;
    }

    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d(spaces.size());
        std::transform(spaces.begin(), spaces.end(), d.begin(), [](const auto& s) { return s.dim(); });
        return d;
    }

    void validate() const {
        if (spaces.empty()) throw std::invalid_argument("at least one hypothesis space is required");
        validate_subset_size(spaces.size(), subset_size);
    }

    CounterRng sampling_stream(std::uint32_t client, std::uint64_t epoch) const {
        return CounterRng(seed, StreamPurpose::Sampling, shared_sampling_stream ? 0 : client, epoch);
    }
};

struct StepSizes {
    double eta = 0.0;
    std::vector<double> lambdas;  // one per space
};

// Raw loss and gradient of every sampled model on one example.
struct SampledEvaluation {
    double lead_prediction = 0.0;
    double lead_loss = 0.0;
    std::vector<double> losses;
    std::vector<std::vector<double>> gradients;
};

inline void check_bounds(const HypothesisSpace& space, std::size_t index, const LossGradient& lg) {
    constexpr double kSlack = 1e-9;
    if (lg.value > space.loss_bound() * (1.0 + kSlack))
        throw BoundViolation("loss " + std::to_string(lg.value) + " of space " + std::to_string(index) +
                             " exceeds its bound C=" + std::to_string(space.loss_bound()));
    const double norm = std::sqrt(std::inner_product(lg.gradient.begin(), lg.gradient.end(), lg.gradient.begin(), 0.0));
    if (norm > space.lipschitz_bound() * (1.0 + kSlack))
        throw BoundViolation("gradient norm " + std::to_string(norm) + " of space " + std::to_string(index) +
                             " exceeds its bound G=" + std::to_string(space.lipschitz_bound()));
}

// Evaluates the models `params[a]` of spaces `indices[a]` on (x, y).
inline SampledEvaluation evaluate_sampled(const ProblemSetup& setup, std::span<const std::uint32_t> indices,
                                          std::span<const std::vector<double>> params, std::span<const double> x,
                                          double y) {
    SampledEvaluation out;
    out.losses.reserve(indices.size());
    out.gradients.reserve(indices.size());
    std::vector<double> features;
    for (std::size_t a = 0; a < indices.size(); ++a) {
        const auto& space = setup.spaces[indices[a]];
        space.feature_map().featurize_into(x, features);
        auto lg = loss_and_gradient_features(setup.loss, params[a], features, y);
        if (setup.check_bounds) check_bounds(space, indices[a], lg);
        if (a == 0) {
            out.lead_prediction = lg.prediction;
            out.lead_loss = lg.value;
        }
        out.losses.push_back(lg.value);
        out.gradients.push_back(std::move(lg.gradient));
    }
    return out;
}

// Model-averaged estimates: c_bar and grad_bar. Empty gradients are zero.
struct AggregatedEstimates {
    std::vector<double> losses;
    std::vector<std::vector<double>> gradients;
};

// Reweights each client's raw report with that client's inclusion
// probabilities and averages over the M clients. `outcomes[j]` is client j's
// sampling outcome; exactly one report per client is required.
inline AggregatedEstimates aggregate_reports(std::span<const UplinkMessage> reports,
                                             std::span<const SamplingOutcome> outcomes) {
    const std::size_t m = outcomes.size();
    if (m == 0) throw ProtocolError("aggregate_reports: no clients");
    if (reports.size() != m)
        throw ProtocolError("aggregate_reports: expected " + std::to_string(m) + " reports, got " +
                            std::to_string(reports.size()));
    std::vector<const UplinkMessage*> by_client(m, nullptr);
    for (const auto& r : reports) {
        if (r.client >= m) throw ProtocolError("aggregate_reports: unknown client " + std::to_string(r.client));
        if (by_client[r.client]) throw ProtocolError("aggregate_reports: duplicate report from client " +
                                                     std::to_string(r.client));
        by_client[r.client] = &r;
    }
    const std::size_t k = outcomes.front().num_spaces();
    AggregatedEstimates agg{std::vector<double>(k, 0.0), std::vector<std::vector<double>>(k)};
    // Sum in client-id order so the result does not depend on arrival order.
    for (std::size_t j = 0; j < m; ++j) {
        const auto& report = *by_client[j];
        const auto& outcome = outcomes[j];
        if (report.indices != outcome.ordered_indices)
            throw ProtocolError("aggregate_reports: client " + std::to_string(j) + " reported unsampled indices");
        const auto losses = estimate_losses(report.losses, outcome);
        const auto grads = estimate_gradients(report.gradients, outcome);
        for (auto i : outcome.ordered_indices) {
            agg.losses[i] += losses.values[i];
            auto& acc = agg.gradients[i];
            if (acc.empty()) acc.assign(grads.values[i].size(), 0.0);
            for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += grads.values[i][c];
        }
    }
    const double count = static_cast<double>(m);
    for (double& c : agg.losses) c /= count;
    for (auto& g : agg.gradients)
        for (double& x : g) x /= count;
    return agg;
}

// Called for every message that crosses the simulated network.
struct FrameObserver {
    std::function<void(const DownlinkMessage&, std::span<const std::uint8_t>, std::uint64_t)> on_downlink;
    std::function<void(const UplinkMessage&, std::span<const std::uint8_t>, std::uint64_t)> on_uplink;
};

template <class Message>
struct Envelope {
    Message message;
    std::vector<std::uint8_t> frame;
    std::uint64_t bits = 0;
};

// In-memory transport: per-client downlink queues and a shared uplink queue
// carrying the same frames a real link would.
class InMemoryTransport {
public:
    InMemoryTransport(std::size_t clients, std::size_t num_spaces, const FrameObserver* observer = nullptr)
        : downlink_(clients), num_spaces_(num_spaces), observer_(observer) {}

    std::uint64_t send_downlink(DownlinkMessage msg) {
        auto env = wrap(std::move(msg));
        if (observer_ && observer_->on_downlink) observer_->on_downlink(env.message, env.frame, env.bits);
        const auto bits = env.bits;
        downlink_.at(env.message.client).push_back(std::move(env));
        return bits;
    }

    std::uint64_t send_uplink(UplinkMessage msg) {
        auto env = wrap(std::move(msg));
        if (observer_ && observer_->on_uplink) observer_->on_uplink(env.message, env.frame, env.bits);
        const auto bits = env.bits;
        uplink_.push_back(std::move(env));
        return bits;
    }

    DownlinkMessage receive_downlink(std::uint32_t client) {
        auto& q = downlink_.at(client);
        if (q.empty()) throw ProtocolError("client " + std::to_string(client) + " has no pending downlink");
        auto msg = std::move(q.front().message);
        q.pop_front();
        return msg;
    }

    std::vector<UplinkMessage> drain_uplink() {
        std::vector<UplinkMessage> out;
        out.reserve(uplink_.size());
        for (auto& env : uplink_) out.push_back(std::move(env.message));
        uplink_.clear();
        return out;
    }

private:
    template <class Message>
    Envelope<Message> wrap(Message msg) {
        Envelope<Message> env{std::move(msg), {}, 0};
        env.bits = account_bits(env.message, num_spaces_);
        env.frame = encode_frame(env.message, num_spaces_);
        if (parse_header(env.frame).payload_bits != env.bits)
            throw ProtocolError("accounted bits disagree with the encoded frame");
        return env;
    }

    std::vector<std::deque<Envelope<DownlinkMessage>>> downlink_;
    std::deque<Envelope<UplinkMessage>> uplink_;
    std::size_t num_spaces_;
    const FrameObserver* observer_;
};

// Server-side state: p (log space), the K models and communication counters.
class ServerState {
public:
    ServerState(const ProblemSetup& setup, LogSimplex initial, std::size_t clients)
        : distribution_(std::move(initial)), clients_(clients) {
        setup.validate();
        if (distribution_.size() != setup.num_spaces())
            throw std::invalid_argument("initial distribution has the wrong dimension");
        if (clients_ == 0) throw std::invalid_argument("at least one client is required");
        models_.reserve(setup.num_spaces());
        for (const auto& s : setup.spaces) models_.push_back(s.initial_parameter());
    }

    const LogSimplex& distribution() const noexcept { return distribution_; }
    const std::vector<std::vector<double>>& models() const noexcept { return models_; }
    std::size_t clients() const noexcept { return clients_; }
    std::size_t epochs_completed() const noexcept { return epochs_completed_; }
    std::uint64_t uplink_bits() const noexcept { return uplink_bits_; }
    std::uint64_t downlink_bits() const noexcept { return downlink_bits_; }
    std::uint64_t uplink_messages() const noexcept { return uplink_messages_; }
    std::uint64_t downlink_messages() const noexcept { return downlink_messages_; }

    // Mirror step on p and projected gradient step on every model.
    void apply(const ProblemSetup& setup, const AggregatedEstimates& agg, const StepSizes& rates) {
        if (rates.lambdas.size() != models_.size()) throw std::invalid_argument("one lambda per space required");
        const WeightedEntropyGeometry geometry(setup.loss_bounds(), rates.eta);
        distribution_ = entropy_mirror_step(geometry, distribution_, agg.losses).point;
        for (std::size_t i = 0; i < models_.size(); ++i) {
            if (agg.gradients[i].empty()) continue;
            const EuclideanGeometry euclid(rates.lambdas[i], setup.spaces[i].constraint());
            models_[i] = euclidean_step(euclid, models_[i], agg.gradients[i]);
        }
    }

    void record_downlink(std::uint64_t bits) {
        downlink_bits_ += bits;
        ++downlink_messages_;
    }
    void record_uplink(std::uint64_t bits) {
        uplink_bits_ += bits;
        ++uplink_messages_;
    }
    void finish_epoch() { ++epochs_completed_; }

private:
    LogSimplex distribution_;
    std::vector<std::vector<double>> models_;
    std::size_t clients_;
    std::size_t epochs_completed_ = 0;
    std::uint64_t uplink_bits_ = 0;
    std::uint64_t downlink_bits_ = 0;
    std::uint64_t uplink_messages_ = 0;
    std::uint64_t downlink_messages_ = 0;
};

namespace detail {

// Client side of one epoch: holds the received models and epoch sums.
class EpochClient {
public:
    explicit EpochClient(DownlinkMessage received) : received_(std::move(received)) {
        loss_sums_.assign(received_.indices.size(), 0.0);
        grad_sums_.reserve(received_.indices.size());
        for (const auto& w : received_.parameters) grad_sums_.emplace_back(w.size(), 0.0);
    }

    SampledEvaluation observe(const ProblemSetup& setup, std::span<const double> x, double y) {
        auto eval = evaluate_sampled(setup, received_.indices, received_.parameters, x, y);
        for (std::size_t a = 0; a < eval.losses.size(); ++a) {
            loss_sums_[a] += eval.losses[a];
            for (std::size_t c = 0; c < grad_sums_[a].size(); ++c) grad_sums_[a][c] += eval.gradients[a][c];
        }
        return eval;
    }

    UplinkMessage report(std::size_t epoch_length) const {
        const double n = static_cast<double>(epoch_length);
        UplinkMessage msg{received_.epoch, received_.client, received_.indices, {}, {}};
        for (std::size_t a = 0; a < loss_sums_.size(); ++a) {
            msg.losses.push_back(loss_sums_[a] / n);
            std::vector<double> g(grad_sums_[a]);
            for (double& x : g) x /= n;
            msg.gradients.push_back(std::move(g));
        }
        return msg;
    }

    std::uint32_t lead_index() const { return received_.indices.front(); }
    const DownlinkMessage& received() const noexcept { return received_; }

private:
    DownlinkMessage received_;
    std::vector<double> loss_sums_;
    std::vector<std::vector<double>> grad_sums_;
};

}  // namespace detail

// Executes epoch r (1-based) for all clients; returns one record per
// (round, client), ordered by round then client id.
inline std::vector<RoundRecord> run_epoch(ServerState& state, const ProblemSetup& setup,
                                          std::span<const ExampleStream> streams, const EpochSchedule& schedule,
                                          std::size_t r, const StepSizes& rates,
                                          const FrameObserver* observer = nullptr) {
    const std::size_t m = state.clients();
    if (streams.size() != m) throw ProtocolError("run_epoch: one example stream per client required");
    if (r == 0 || r > schedule.epochs()) throw ProtocolError("run_epoch: epoch index out of range");
    if (state.epochs_completed() != r - 1)
        throw ProtocolError("run_epoch: epoch " + std::to_string(r) + " requested but " +
                            std::to_string(state.epochs_completed()) + " completed");
    const std::size_t first = schedule.first_round(r);
    const std::size_t last = schedule.last_round(r);
    for (std::size_t j = 0; j < m; ++j) {
        if (streams[j].size() < last)
            throw ProtocolError("run_epoch: stream of client " + std::to_string(j) + " exhausted at round " +
                                std::to_string(streams[j].size() + 1));
    }

    const auto k = setup.num_spaces();
    InMemoryTransport transport(m, k, observer);
    const auto p = state.distribution().probabilities();

    std::vector<SamplingOutcome> outcomes;
    std::vector<std::uint64_t> down_bits(m), up_bits(m);
    outcomes.reserve(m);
    for (std::uint32_t j = 0; j < m; ++j) {
        auto rng = setup.sampling_stream(j, r);
        outcomes.push_back(sample_subset(p, setup.subset_size, rng));
        DownlinkMessage msg{static_cast<std::uint32_t>(r), j, outcomes.back().ordered_indices, {}};
        for (auto i : msg.indices) msg.parameters.push_back(state.models()[i]);
        down_bits[j] = transport.send_downlink(std::move(msg));
        state.record_downlink(down_bits[j]);
    }

    std::vector<detail::EpochClient> clients;
    clients.reserve(m);
    for (std::uint32_t j = 0; j < m; ++j) clients.emplace_back(transport.receive_downlink(j));

    std::vector<RoundRecord> records;
    records.reserve((last - first + 1) * m);
    for (std::size_t t = first; t <= last; ++t) {
        for (std::uint32_t j = 0; j < m; ++j) {
            const auto& x = streams[j].inputs[t - 1];
            const double y = streams[j].targets[t - 1];
            const auto eval = clients[j].observe(setup, x, y);
            RoundRecord rec;
            rec.round = t;
            rec.client = j;
            rec.epoch = r;
            rec.lead_index = clients[j].lead_index();
            rec.prediction = eval.lead_prediction;
            rec.loss = eval.lead_loss;
            rec.target = y;
            if (t == first) rec.downlink_bits = down_bits[j];
            if (t == last) {
                up_bits[j] = transport.send_uplink(clients[j].report(schedule.length()));
                state.record_uplink(up_bits[j]);
                rec.uplink_bits = up_bits[j];
            }
            records.push_back(rec);
        }
    }

    const auto reports = transport.drain_uplink();
    state.apply(setup, aggregate_reports(reports, outcomes), rates);
    state.finish_epoch();
    return records;
}

}  // namespace oms
