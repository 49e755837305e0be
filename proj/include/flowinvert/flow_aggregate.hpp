#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowinvert/common.hpp"

namespace flowinvert {

// Histogram of flow sizes: counts[j] = number of flows with exactly j packets.
// For sampled data counts[j] is W_j and total_flows is K_s.
struct FlowHistogram {
    std::map<std::int64_t, std::int64_t> counts;
    std::int64_t total_flows = 0;
    std::int64_t total_packets = 0;

    std::int64_t count_at(std::int64_t j) const {
        auto it = counts.find(j);
        return it == counts.end() ? 0 : it->second;
    }
    std::int64_t max_size() const {
        return counts.empty() ? 0 : counts.rbegin()->first;
    }
    void validate() const;
};

// Single-pass aggregation of packet records into per-flow counts. Keys are
// digested to 64 bits; collisions are resolved by exact key comparison.
class FlowAggregator {
public:
    void add(std::string_view flow_key);
    void add_id(std::uint32_t flow_id);  // fast path for synthetic integer ids
    FlowHistogram finalize() const;

    std::int64_t packets_seen() const { return packets_; }

private:
    struct Entry {
        std::string key;
        std::int64_t count = 0;
    };
    std::map<std::uint64_t, std::vector<Entry>> buckets_;
    std::vector<std::int64_t> id_counts_;
    std::int64_t packets_ = 0;
};

std::uint64_t flow_key_digest(std::string_view key);

// Aggregates a range of keys in one pass.
FlowHistogram aggregate(std::span<const std::string> records);
// Aggregates synthetic integer-id packets (e.g. deterministic_sample output).
FlowHistogram aggregate_ids(std::span<const std::uint32_t> packet_flow_ids);
// Data-parallel variant: partitions records by key digest into shards,
// aggregates each shard independently and merges. Result is identical to the
// single-pass aggregation for any shard count.
FlowHistogram aggregate_sharded(std::span<const std::string> records, int shards);

FlowHistogram merge_histograms(std::span<const FlowHistogram> parts);

// P(size >= j) at every support point j (descending cumulative / total).
// Use ccdf_at() to query arbitrary j in [1, max size].
std::map<std::int64_t, double> histogram_ccdf(const FlowHistogram& hist);
double ccdf_at(const std::map<std::int64_t, double>& ccdf, std::int64_t j);

// Histogram TSV: "size<TAB>count" lines, ascending, no header.
void write_histogram_tsv(std::ostream& out, const FlowHistogram& hist);
FlowHistogram read_histogram_tsv(std::istream& in);

// Packet-record CSV ingestion. A record line is either a single opaque
// flow_id token or the 5 columns src,dst,sport,dport,proto (canonicalized to
// lowercase joined with '|'). An optional leading header is skipped.
struct CsvStats {
    std::int64_t lines = 0;
    std::int64_t records = 0;
    std::int64_t malformed = 0;
    std::vector<std::int64_t> malformed_lines;  // 1-based, first 100 kept
};

std::string canonical_flow_key(std::span<const std::string_view> fields);

CsvStats read_packet_csv(std::istream& in,
                         const std::function<void(std::string_view)>& on_record);

}  // namespace flowinvert
