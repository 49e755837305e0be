#include "flowinvert/flow_aggregate.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

namespace flowinvert {

void FlowHistogram::validate() const {
    std::int64_t flows = 0;
    std::int64_t packets = 0;
    for (const auto& [size, count] : counts) {
        if (size < 1) throw InvalidArgumentError("FlowHistogram: sizes must be >= 1");
        if (count < 0) throw InvalidArgumentError("FlowHistogram: negative count");
        flows += count;
        packets += size * count;
    }
    if (flows != total_flows || packets != total_packets)
        throw InvalidArgumentError("FlowHistogram: totals do not match counts");
}

std::uint64_t flow_key_digest(std::string_view key) {
    // FNV-1a 64-bit.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void FlowAggregator::add(std::string_view flow_key) {
    if (flow_key.empty()) throw InvalidArgumentError("FlowAggregator: empty flow key");
    ++packets_;
    const std::uint64_t digest = flow_key_digest(flow_key);
    auto& bucket = buckets_[digest];
    for (Entry& e : bucket) {
        if (e.key == flow_key) {
            ++e.count;
            return;
        }
    }
    bucket.push_back(Entry{std::string(flow_key), 1});
}

void FlowAggregator::add_id(std::uint32_t flow_id) {
    ++packets_;
    if (flow_id >= id_counts_.size()) id_counts_.resize(flow_id + 1, 0);
    ++id_counts_[flow_id];
}

FlowHistogram FlowAggregator::finalize() const {
    FlowHistogram hist;
    for (const auto& [digest, bucket] : buckets_) {
        for (const Entry& e : bucket) {
            ++hist.counts[e.count];
            ++hist.total_flows;
            hist.total_packets += e.count;
        }
    }
    for (std::int64_t c : id_counts_) {
        if (c > 0) {
            ++hist.counts[c];
            ++hist.total_flows;
            hist.total_packets += c;
        }
    }
    return hist;
}

FlowHistogram aggregate(std::span<const std::string> records) {
    FlowAggregator agg;
    for (const std::string& r : records) agg.add(r);
    return agg.finalize();
}

FlowHistogram aggregate_ids(std::span<const std::uint32_t> packet_flow_ids) {
    FlowAggregator agg;
    for (std::uint32_t id : packet_flow_ids) agg.add_id(id);
    return agg.finalize();
}

FlowHistogram aggregate_sharded(std::span<const std::string> records, int shards) {
    if (shards < 1) throw InvalidArgumentError("aggregate_sharded: shards must be >= 1");
    std::vector<FlowAggregator> aggs(static_cast<std::size_t>(shards));
    for (const std::string& r : records) {
        aggs[flow_key_digest(r) % static_cast<std::uint64_t>(shards)].add(r);
    }
    std::vector<FlowHistogram> parts;
    parts.reserve(aggs.size());
    for (const FlowAggregator& a : aggs) parts.push_back(a.finalize());
    return merge_histograms(parts);
}

FlowHistogram merge_histograms(std::span<const FlowHistogram> parts) {
    FlowHistogram out;
    for (const FlowHistogram& h : parts) {
        for (const auto& [size, count] : h.counts) out.counts[size] += count;
        out.total_flows += h.total_flows;
        out.total_packets += h.total_packets;
    }
    return out;
}

std::map<std::int64_t, double> histogram_ccdf(const FlowHistogram& hist) {
    if (hist.total_flows < 1) throw InvalidArgumentError("histogram_ccdf: empty histogram");
    std::map<std::int64_t, double> ccdf;
    std::int64_t above = 0;
    for (auto it = hist.counts.rbegin(); it != hist.counts.rend(); ++it) {
        above += it->second;
        ccdf[it->first] = static_cast<double>(above) / static_cast<double>(hist.total_flows);
    }
    return ccdf;
}

double ccdf_at(const std::map<std::int64_t, double>& ccdf, std::int64_t j) {
    if (j <= 1) return ccdf.empty() ? 0.0 : 1.0;
    // P(size >= j) equals the ccdf at the smallest support point >= j.
    auto it = ccdf.lower_bound(j);
    return it == ccdf.end() ? 0.0 : it->second;
}

void write_histogram_tsv(std::ostream& out, const FlowHistogram& hist) {
    for (const auto& [size, count] : hist.counts) {
        out << size << '\t' << count << '\n';
    }
}

FlowHistogram read_histogram_tsv(std::istream& in) {
    FlowHistogram hist;
    std::int64_t size = 0;
    std::int64_t count = 0;
    while (in >> size >> count) {
        if (size < 1 || count < 0)
            throw InvalidArgumentError("histogram TSV: bad size/count pair");
        hist.counts[size] += count;
        hist.total_flows += count;
        hist.total_packets += size * count;
    }
    return hist;
}

std::string canonical_flow_key(std::span<const std::string_view> fields) {
    std::string key;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) key += '|';
        for (char c : fields[i]) {
            key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return key;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

CsvStats read_packet_csv(std::istream& in,
                         const std::function<void(std::string_view)>& on_record) {
    CsvStats stats;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        ++stats.lines;
        std::string_view view = trim(line);
        if (first) {
            first = false;
            if (view == "flow_id" || view == "src,dst,sport,dport,proto") continue;
        }
        if (view.empty()) {
            ++stats.malformed;
            if (stats.malformed_lines.size() < 100) stats.malformed_lines.push_back(stats.lines);
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = view.find(',', start);
            fields.push_back(trim(view.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        bool ok = false;
        if (fields.size() == 1 && !fields[0].empty()) {
            on_record(fields[0]);
            ok = true;
        } else if (fields.size() == 5) {
            ok = std::all_of(fields.begin(), fields.end(),
                             [](std::string_view f) { return !f.empty(); });
            if (ok) on_record(canonical_flow_key(fields));
        }
        if (ok) {
            ++stats.records;
        } else {
            ++stats.malformed;
            if (stats.malformed_lines.size() < 100) stats.malformed_lines.push_back(stats.lines);
        }
    }
    return stats;
}

}  // namespace flowinvert
