#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowinvert/flow_aggregate.hpp"
#include "flowinvert/flow_model.hpp"
#include "flowinvert/inversion.hpp"
#include "flowinvert/trace_synth.hpp"

namespace {

using namespace flowinvert;

int log_level() {
    static int level = [] {
        const char* env = std::getenv("FLOWINVERT_LOG");
        if (!env) return 1;
        const std::string v(env);
        if (v == "debug") return 3;
        if (v == "info") return 2;
        if (v == "warn") return 1;
        if (v == "error") return 0;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[info] " << msg << "\n";
}

void log_warn(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[warn] " << msg << "\n";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

// Stable identifier tying truth files to reports: digest of the generating
// inputs, so re-running with the same model/count/seed matches.
std::string make_run_id(const std::string& model_json, std::int64_t count, std::uint64_t seed) {
    std::uint64_t h = flow_key_digest(model_json);
    h ^= flow_key_digest(std::to_string(count)) * 31;
    h ^= flow_key_digest(std::to_string(seed)) * 131;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct GenerateArgs {
    std::string model_path;
    std::int64_t count = 10000;
    std::uint64_t seed = 1;
    std::string mode = "shuffle";
    std::string out_prefix;
};

int cmd_generate(const GenerateArgs& args) {
    const std::string model_json = slurp(args.model_path);
    const FlowSizeModel model = FlowSizeModel::from_json(model_json);
    const auto sizes = model.draw(args.count, args.seed);

    const InterleaveMode mode =
        args.mode == "round_robin" ? InterleaveMode::kRoundRobin : InterleaveMode::kShuffle;
    const PacketStream stream = interleave(sizes, mode, args.seed);

    auto packets = open_out(args.out_prefix + ".packets.csv");
    for (std::uint32_t fid : stream.flow_of_packet) {
        packets << 'f' << fid << '\n';
    }

    FlowHistogram truth_hist;
    std::int64_t k0_plus = 0;
    for (std::int64_t v : sizes) {
        ++truth_hist.counts[v];
        ++truth_hist.total_flows;
        truth_hist.total_packets += v;
        if (v >= model.b0()) ++k0_plus;
    }
    auto hist_out = open_out(args.out_prefix + ".truth_hist.tsv");
    write_histogram_tsv(hist_out, truth_hist);

    nlohmann::json truth;
    truth["schema"] = 1;
    truth["run_id"] = make_run_id(model_json, args.count, args.seed);
    truth["K"] = args.count;
    truth["K0_plus"] = k0_plus;
    truth["K0_minus"] = args.count - k0_plus;
    truth["total_packets"] = stream.total_packets();
    truth["seed"] = args.seed;
    truth["mode"] = args.mode;
    truth["model"] = nlohmann::json::parse(model.to_json());
    auto truth_out = open_out(args.out_prefix + ".truth.json");
    truth_out << truth.dump(2) << "\n";

    log_info("generated " + std::to_string(stream.total_packets()) + " packets from " +
             std::to_string(args.count) + " flows");
    std::cout << args.out_prefix << ".packets.csv\n";
    return 0;
}

struct SampleArgs {
    std::string in_path;
    std::int64_t k = 100;
    std::int64_t phase = 0;
    std::string out_prefix;
};

int cmd_sample(const SampleArgs& args) {
    SamplingConfig config{args.k, args.phase, 0};
    config.validate();
    std::ifstream in(args.in_path);
    if (!in) throw std::runtime_error("cannot open " + args.in_path);
    auto out = open_out(args.out_prefix + ".sampled.csv");

    std::int64_t index = 0;
    std::int64_t emitted = 0;
    const CsvStats stats = read_packet_csv(in, [&](std::string_view key) {
        if (index % args.k == args.phase) {
            out << key << '\n';
            ++emitted;
        }
        ++index;
    });
    for (std::int64_t line : stats.malformed_lines) {
        log_warn("malformed record at line " + std::to_string(line));
    }
    if (stats.malformed > 0) {
        log_warn(std::to_string(stats.malformed) + " malformed lines skipped");
    }
    log_info("sampled " + std::to_string(emitted) + " of " + std::to_string(stats.records) +
             " packets");
    std::cout << args.out_prefix << ".sampled.csv\n";
    return 0;
}

struct AggregateArgs {
    std::string in_path;
    std::string out_prefix;
};

int cmd_aggregate(const AggregateArgs& args) {
    std::ifstream in(args.in_path);
    if (!in) throw std::runtime_error("cannot open " + args.in_path);
    FlowAggregator agg;
    const CsvStats stats = read_packet_csv(in, [&](std::string_view key) { agg.add(key); });
    for (std::int64_t line : stats.malformed_lines) {
        log_warn("malformed record at line " + std::to_string(line));
    }
    const FlowHistogram hist = agg.finalize();
    auto out = open_out(args.out_prefix + ".hist.tsv");
    write_histogram_tsv(out, hist);
    log_info("aggregated " + std::to_string(stats.records) + " packets into " +
             std::to_string(hist.total_flows) + " flows");
    std::cout << args.out_prefix << ".hist.tsv\n";
    return 0;
}

struct InvertArgs {
    std::string in_path;
    std::int64_t k = 100;
    std::int64_t b0 = 20;
    int m = 0;
    std::int64_t j_min = 3;
    std::string tail_correction = "off";
    std::string run_id;
    std::string out_prefix;
};

int cmd_invert(const InvertArgs& args) {
    std::ifstream in(args.in_path);
    if (!in) throw std::runtime_error("cannot open " + args.in_path);
    const FlowHistogram hist = read_histogram_tsv(in);

    InvertOptions options;
    options.k = args.k;
    options.b0 = args.b0;
    options.detect.m = args.m;
    options.detect.j_min = args.j_min;
    options.tail_correction =
        args.tail_correction == "fitted" ? TailCorrection::kFitted : TailCorrection::kOff;

    InversionReport report = invert_histogram(hist, options);
    report.run_id = args.run_id;
    auto report_out = open_out(args.out_prefix + ".report.json");
    report_out << report.to_json() << "\n";

    if (!report.failed_stage.empty()) {
        std::cerr << "[error] inversion failed at stage " << report.failed_stage << ": "
                  << report.failure << "\n";
        std::cout << args.out_prefix << ".report.json\n";
        return 1;
    }

    // Recovered original-domain ccdf on a log-spaced integer grid.
    {
        auto out = open_out(args.out_prefix + ".recovered_ccdf.tsv");
        const FlowSizeModel& model = *report.recovered;
        const double p = report.p;
        const std::int64_t hi = std::max<std::int64_t>(
            static_cast<std::int64_t>(static_cast<double>(hist.max_size()) / p) * 10, 1000);
        std::int64_t prev = 0;
        for (double x = 1.0; x <= static_cast<double>(hi); x *= 1.02) {
            const std::int64_t j = static_cast<std::int64_t>(x);
            if (j == prev) continue;
            prev = j;
            out << j << '\t' << model.ccdf(j) << '\n';
        }
    }
    // Rescaled sampled tail for overlay plots.
    {
        auto out = open_out(args.out_prefix + ".overlay.tsv");
        const auto overlay = rescale_tail(histogram_ccdf(hist), report.p, report.nu_hat);
        for (const auto& [x, c] : overlay) {
            out << x << '\t' << c << '\n';
        }
    }
    log_info("inversion complete: K_hat = " + std::to_string(report.k_hat));
    std::cout << args.out_prefix << ".report.json\n";
    return 0;
}

struct ScoreArgs {
    std::string truth_path;
    std::string report_path;
    std::string out_prefix;
};

double rel_error(double est, double truth) {
    if (truth == 0.0) return est == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::fabs(est - truth) / std::fabs(truth);
}

int cmd_score(const ScoreArgs& args) {
    const nlohmann::json truth = nlohmann::json::parse(slurp(args.truth_path));
    const nlohmann::json report = nlohmann::json::parse(slurp(args.report_path));

    if (report.contains("run_id") && truth.contains("run_id") &&
        report["run_id"] != truth["run_id"]) {
        throw std::runtime_error("run identifier mismatch between truth and report");
    }
    if (report.contains("failed_stage")) {
        throw std::runtime_error("report is partial (failed at " +
                                 report["failed_stage"].get<std::string>() + ")");
    }

    const double k_true = truth.at("K").get<double>();
    const double ks = report.at("Ks").get<double>();
    const auto& model = truth.at("model");

    nlohmann::json score;
    score["schema"] = 1;
    score["rel_error"] = nlohmann::json::object();
    auto& err = score["rel_error"];
    err["K"] = rel_error(report.at("K_hat").get<double>(), k_true);
    err["K0_plus"] = rel_error(report.at("K0_plus").get<double>(),
                               truth.at("K0_plus").get<double>());
    err["K0_minus"] = rel_error(report.at("K0_minus").get<double>(),
                                truth.at("K0_minus").get<double>());
    err["r"] = rel_error(report.at("r_hat").get<double>(), model.at("r").get<double>());
    err["nu"] = rel_error(report.at("nu_hat").get<double>(), ks / k_true);
    const auto& segs = model.at("segments");
    const auto& shapes = report.at("shapes");
    for (std::size_t i = 0; i < std::min(segs.size(), shapes.size()); ++i) {
        err["a" + std::to_string(i + 1)] =
            rel_error(shapes[i].get<double>(), segs[i].at("shape").get<double>());
    }
    auto out = open_out(args.out_prefix + ".score.json");
    out << score.dump(2) << "\n";
    std::cout << score.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-out-of-k packet sampling simulator and flow-size distribution inverter"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "synthesize a packet trace from a model");
    generate->add_option("--model", gen.model_path, "flow-size model JSON")->required();
    generate->add_option("--count", gen.count, "number of flows")->required();
    generate->add_option("--seed", gen.seed, "generator seed")->required();
    generate->add_option("--mode", gen.mode, "interleaving: shuffle|round_robin")
        ->check(CLI::IsMember({"shuffle", "round_robin"}));
    generate->add_option("--out-prefix", gen.out_prefix, "output path prefix")->required();

    SampleArgs smp;
    auto* sample = app.add_subcommand("sample", "apply deterministic 1-out-of-k sampling");
    sample->add_option("--in", smp.in_path, "packet CSV")->required();
    sample->add_option("--k", smp.k, "sampling period")->required();
    sample->add_option("--phase", smp.phase, "sampling phase in [0, k)");
    sample->add_option("--out-prefix", smp.out_prefix, "output path prefix")->required();

    AggregateArgs agg;
    auto* aggregate = app.add_subcommand("aggregate", "aggregate packets into a flow histogram");
    aggregate->add_option("--in", agg.in_path, "packet CSV")->required();
    aggregate->add_option("--out-prefix", agg.out_prefix, "output path prefix")->required();

    InvertArgs inv;
    auto* invert = app.add_subcommand("invert", "recover the flow-size distribution");
    invert->add_option("--in", inv.in_path, "sampled histogram TSV")->required();
    invert->add_option("--k", inv.k, "sampling period used for the trace")->required();
    invert->add_option("--b0", inv.b0, "head/tail boundary in packets");
    invert->add_option("--m", inv.m, "number of Pareto segments (0 = auto up to 3)");
    invert->add_option("--jmin", inv.j_min, "smallest sampled size considered");
    invert->add_option("--tail-correction", inv.tail_correction, "off|fitted")
        ->check(CLI::IsMember({"off", "fitted"}));
    invert->add_option("--run-id", inv.run_id, "run identifier copied into the report");
    invert->add_option("--out-prefix", inv.out_prefix, "output path prefix")->required();

    ScoreArgs sc;
    auto* score = app.add_subcommand("score", "score a report against generator ground truth");
    score->add_option("--truth", sc.truth_path, "truth JSON from generate")->required();
    score->add_option("--report", sc.report_path, "report JSON from invert")->required();
    score->add_option("--out-prefix", sc.out_prefix, "output path prefix")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(gen);
        if (sample->parsed()) return cmd_sample(smp);
        if (aggregate->parsed()) return cmd_aggregate(agg);
        if (invert->parsed()) return cmd_invert(inv);
        if (score->parsed()) return cmd_score(sc);
    } catch (const std::exception& e) {
        std::cerr << "[error] " << e.what() << "\n";
        return 1;
    }
    return 0;
}
