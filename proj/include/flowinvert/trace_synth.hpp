#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowinvert/common.hpp"

namespace flowinvert {

// Interleaved packet stream: one flow index per packet. Under the
// permanent-flow assumption every flow spans the whole window, so the
// stream length is the total packet count seen by each flow.
struct PacketStream {
    std::vector<std::uint32_t> flow_of_packet;

    std::int64_t total_packets() const {
        return static_cast<std::int64_t>(flow_of_packet.size());
    }
};

struct SamplingConfig {
    std::int64_t k = 1;            // sampling period, p = 1/k
    std::int64_t phase = 0;        // offset in [0, k)
    std::uint64_t seed = 0;

    double rate() const { return 1.0 / static_cast<double>(k); }
    void validate() const;
};

enum class InterleaveMode { kShuffle, kRoundRobin };

// Builds the packet stream. kShuffle emits a seeded uniformly random
// permutation of the per-flow packet multiset; kRoundRobin cycles the flows
// emitting one packet per still-live flow per round (seed unused).
PacketStream interleave(std::span<const std::int64_t> flow_sizes, InterleaveMode mode,
                        std::uint64_t seed);

// Selects packets whose 0-based stream index is congruent to phase mod k,
// preserving order.
std::vector<std::uint32_t> deterministic_sample(const PacketStream& stream,
                                                const SamplingConfig& config);

// Independent per-packet retention with probability p; per-flow retained
// counts, zeros included. The probabilistic counterpart of deterministic
// sampling over a well-interleaved stream.
std::vector<std::int64_t> bernoulli_thin(std::span<const std::int64_t> flow_sizes, double p,
                                         std::uint64_t seed);

}  // namespace flowinvert
