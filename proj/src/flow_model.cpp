#include "flowinvert/flow_model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace flowinvert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxDrawSize = 4.0e18;  // saturation guard for int64 sizes

}  // namespace

double ParetoSegment::ccdf_at(double j) const {
    if (j <= static_cast<double>(lo)) return scale_mass;
    return scale_mass * std::pow(static_cast<double>(lo) / j, shape);
}

FlowSizeModel::FlowSizeModel(double r, std::int64_t b0, double head_mass,
                             std::vector<ParetoSegment> segments)
    : r_(r), b0_(b0), head_mass_(head_mass), segments_(std::move(segments)) {
    if (b0_ < 1) throw InvalidArgumentError("FlowSizeModel: b0 must be >= 1");
    if (!(head_mass_ >= 0.0 && head_mass_ <= 1.0))
        throw InvalidArgumentError("FlowSizeModel: head_mass must be in [0, 1]");
    if (head_mass_ > 0.0) {
        if (b0_ < 2) throw InvalidArgumentError("FlowSizeModel: geometric head needs b0 >= 2");
        if (!(r_ > 0.0 && r_ < 1.0))
            throw InvalidArgumentError("FlowSizeModel: head ratio r must be in (0, 1)");
    }
    head_norm_ = r_ - std::pow(r_, static_cast<double>(b0_));

    if (segments_.empty()) {
        if (head_mass_ != 1.0)
            throw InvalidArgumentError("FlowSizeModel: tail segments required unless head_mass == 1");
        return;
    }
    if (segments_.front().lo != b0_)
        throw InvalidArgumentError("FlowSizeModel: first segment must start at b0");
    double mass = 1.0 - head_mass_;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        ParetoSegment& seg = segments_[i];
        if (!(seg.shape > 0.0))
            throw InvalidArgumentError("FlowSizeModel: segment shape must be positive");
        if (!(seg.hi > static_cast<double>(seg.lo)))
            throw InvalidArgumentError("FlowSizeModel: segment hi must exceed lo");
        seg.scale_mass = mass;
        const bool last = (i + 1 == segments_.size());
        if (last) {
            if (!seg.unbounded())
                throw InvalidArgumentError("FlowSizeModel: last segment must extend to infinity");
        } else {
            if (seg.unbounded())
                throw InvalidArgumentError("FlowSizeModel: only the last segment may be unbounded");
            if (static_cast<double>(segments_[i + 1].lo) != seg.hi)
                throw InvalidArgumentError("FlowSizeModel: segments must be contiguous");
            mass = seg.ccdf_at(seg.hi);
        }
    }
}

double FlowSizeModel::head_prefix_mass(std::int64_t j) const {
    // P(v < j) for j in [1, b0].
    if (head_mass_ == 0.0) return 0.0;
    const double rj = std::pow(r_, static_cast<double>(j));
    return head_mass_ * (r_ - rj) / head_norm_;
}

double FlowSizeModel::pmf(std::int64_t j) const {
    if (j < 1) throw InvalidArgumentError("model_pmf: j must be >= 1");
    if (j < b0_) {
        if (head_mass_ == 0.0) return 0.0;
        return head_mass_ * (1.0 - r_) * std::pow(r_, static_cast<double>(j)) / head_norm_;
    }
    return ccdf(j) - ccdf(j + 1);
}

double FlowSizeModel::ccdf(std::int64_t j) const {
    if (j < 1) throw InvalidArgumentError("model_ccdf: j must be >= 1");
    if (j <= b0_) {
        return 1.0 - head_prefix_mass(j);
    }
    const double x = static_cast<double>(j);
    for (const ParetoSegment& seg : segments_) {
        if (x < seg.hi || seg.unbounded()) return seg.ccdf_at(x);
    }
    return 0.0;  // pure-head model beyond b0
}

DiscretePmf FlowSizeModel::to_pmf(std::int64_t cap) const {
    if (cap < 1) throw InvalidArgumentError("to_pmf: cap must be >= 1");
    DiscretePmf out;
    out.support_start = 1;
    out.probs.resize(static_cast<std::size_t>(cap));
    double cur = ccdf(1);
    for (std::int64_t j = 1; j <= cap; ++j) {
        const double next = ccdf(j + 1);
        out.probs[static_cast<std::size_t>(j - 1)] =
            (j < b0_) ? pmf(j) : std::max(cur - next, 0.0);
        cur = next;
    }
    out.tail_mass = ccdf(cap + 1);
    return out;
}

std::int64_t FlowSizeModel::invert_u(double u) const {
    // Largest j >= 1 with ccdf(j) > u.
    const double tail_top = 1.0 - head_mass_;
    if (u >= tail_top && head_mass_ > 0.0) {
        const double c = r_ - (1.0 - u) * head_norm_ / head_mass_;
        std::int64_t j;
        if (c <= 0.0) {
            j = b0_ - 1;
        } else {
            j = static_cast<std::int64_t>(std::floor(std::log(c) / std::log(r_)));
            j = std::clamp<std::int64_t>(j, 1, b0_ - 1);
        }
        while (j > 1 && ccdf(j) <= u) --j;
        while (j + 1 <= b0_ - 1 && ccdf(j + 1) > u) ++j;
        return j;
    }
    // Tail: locate the segment whose ccdf range contains u.
    const ParetoSegment* seg = &segments_.back();
    for (const ParetoSegment& s : segments_) {
        const double lower = s.unbounded() ? 0.0 : s.ccdf_at(s.hi);
        if (u >= lower) {
            seg = &s;
            break;
        }
    }
    double x = static_cast<double>(seg->lo) *
               std::pow(seg->scale_mass / u, 1.0 / seg->shape);
    if (x > kMaxDrawSize) return static_cast<std::int64_t>(kMaxDrawSize);
    std::int64_t j = std::max<std::int64_t>(static_cast<std::int64_t>(std::floor(x)), seg->lo);
    while (j > 1 && ccdf(j) <= u) --j;
    while (ccdf(j + 1) > u) ++j;
    return j;
}

std::vector<std::int64_t> FlowSizeModel::draw(std::int64_t count, std::uint64_t seed) const {
    if (count < 1) throw InvalidArgumentError("draw_flow_sizes: count must be >= 1");
    Rng rng(seed);
    std::vector<std::int64_t> sizes;
    sizes.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        sizes.push_back(invert_u(rng.uniform_open()));
    }
    return sizes;
}

std::string FlowSizeModel::to_json() const {
    nlohmann::json j;
    j["r"] = r_;
    j["b0"] = b0_;
    j["head_mass"] = head_mass_;
    j["segments"] = nlohmann::json::array();
    for (const ParetoSegment& seg : segments_) {
        nlohmann::json s;
        s["lo"] = seg.lo;
        if (seg.unbounded()) {
            s["hi"] = nullptr;
        } else {
            s["hi"] = seg.hi;
        }
        s["shape"] = seg.shape;
        j["segments"].push_back(s);
    }
    return j.dump(2);
}

FlowSizeModel FlowSizeModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<ParetoSegment> segs;
    for (const auto& s : j.at("segments")) {
        ParetoSegment seg;
        seg.lo = s.at("lo").get<std::int64_t>();
        seg.hi = s.at("hi").is_null() ? kInf : s.at("hi").get<double>();
        seg.shape = s.at("shape").get<double>();
        segs.push_back(seg);
    }
    return FlowSizeModel(j.at("r").get<double>(), j.at("b0").get<std::int64_t>(),
                         j.at("head_mass").get<double>(), std::move(segs));
}

FlowSizeModel pure_pareto_model(std::int64_t lo, double shape) {
    return FlowSizeModel(0.5, lo, 0.0, {ParetoSegment{lo, kInf, shape, 1.0}});
}

FlowSizeModel pure_geometric_model(double r, std::int64_t cap_b0) {
    return FlowSizeModel(r, cap_b0, 1.0, {});
}

}  // namespace flowinvert
