#pragma once

#include <cstdint>
#include <vector>

namespace oms {

// One client's ordered examples (x_t, y_t), t = 1..T.
struct ExampleStream {
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;

    std::size_t size() const noexcept { return targets.size(); }
    std::size_t dim() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }
};

// One (round, client) row of a run trace.
struct RoundRecord {
    std::uint64_t round = 0;  // 1-based
    std::uint32_t client = 0;
    std::uint64_t epoch = 0;  // 1-based
    std::uint32_t lead_index = 0;
    double prediction = 0.0;
    double loss = 0.0;  // loss of the lead model only
    double target = 0.0;
    std::uint64_t uplink_bits = 0;
    std::uint64_t downlink_bits = 0;
};

}  // namespace oms
