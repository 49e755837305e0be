#include "flowinvert/trace_synth.hpp"

#include <algorithm>
#include <numeric>

namespace flowinvert {

void SamplingConfig::validate() const {
    if (k < 1) throw InvalidArgumentError("SamplingConfig: k must be >= 1");
    if (phase < 0 || phase >= k)
        throw InvalidArgumentError("SamplingConfig: phase must be in [0, k)");
}

PacketStream interleave(std::span<const std::int64_t> flow_sizes, InterleaveMode mode,
                        std::uint64_t seed) {
    if (flow_sizes.empty()) throw InvalidArgumentError("interleave: no flows");
    std::int64_t total = 0;
    for (std::size_t i = 0; i < flow_sizes.size(); ++i) {
        if (flow_sizes[i] < 1)
            throw InvalidArgumentError("interleave: flow sizes must be >= 1");
        total += flow_sizes[i];
    }

    PacketStream stream;
    stream.flow_of_packet.reserve(static_cast<std::size_t>(total));

    if (mode == InterleaveMode::kRoundRobin) {
        std::vector<std::int64_t> remaining(flow_sizes.begin(), flow_sizes.end());
        std::int64_t live = static_cast<std::int64_t>(flow_sizes.size());
        while (live > 0) {
            for (std::size_t f = 0; f < remaining.size(); ++f) {
                if (remaining[f] > 0) {
                    stream.flow_of_packet.push_back(static_cast<std::uint32_t>(f));
                    if (--remaining[f] == 0) --live;
                }
            }
        }
        return stream;
    }

    for (std::size_t f = 0; f < flow_sizes.size(); ++f) {
        stream.flow_of_packet.insert(stream.flow_of_packet.end(),
                                     static_cast<std::size_t>(flow_sizes[f]),
                                     static_cast<std::uint32_t>(f));
    }
    // Fisher-Yates with an explicit bounded draw keeps the permutation
    // identical across platforms for a given seed.
    Rng rng(seed);
    for (std::size_t i = stream.flow_of_packet.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(stream.flow_of_packet[i - 1], stream.flow_of_packet[j]);
    }
    return stream;
}

std::vector<std::uint32_t> deterministic_sample(const PacketStream& stream,
                                                const SamplingConfig& config) {
    config.validate();
    std::vector<std::uint32_t> sampled;
    const std::size_t n = stream.flow_of_packet.size();
    sampled.reserve(n / static_cast<std::size_t>(config.k) + 1);
    for (std::size_t i = static_cast<std::size_t>(config.phase); i < n;
         i += static_cast<std::size_t>(config.k)) {
        sampled.push_back(stream.flow_of_packet[i]);
    }
    return sampled;
}

std::vector<std::int64_t> bernoulli_thin(std::span<const std::int64_t> flow_sizes, double p,
                                         std::uint64_t seed) {
    if (!(p > 0.0 && p <= 1.0))
        throw InvalidArgumentError("bernoulli_thin: p must be in (0, 1]");
    Rng rng(seed);
    std::vector<std::int64_t> retained(flow_sizes.size(), 0);
    for (std::size_t f = 0; f < flow_sizes.size(); ++f) {
        if (flow_sizes[f] < 1)
            throw InvalidArgumentError("bernoulli_thin: flow sizes must be >= 1");
        std::int64_t kept = 0;
        for (std::int64_t i = 0; i < flow_sizes[f]; ++i) {
            if (rng.bernoulli(p)) ++kept;
        }
        retained[f] = kept;
    }
    return retained;
}

}  // namespace flowinvert
