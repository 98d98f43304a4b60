#include "normscale/pipeline.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "normscale/error.hpp"

namespace normscale {
namespace {

using ojson = nlohmann::ordered_json;

ojson summary_json(const MetricSummary& s) {
    ojson j;
    j["mean"] = s.mean;
    j["std"] = s.std;
    return j;
}

ojson aggregate_json(const AggregateReport& a) {
    ojson j;
    j["auroc"] = summary_json(a.auroc);
    j["aupr"] = summary_json(a.aupr);
    j["fpr95"] = summary_json(a.fpr95);
    j["ece"] = a.ece ? summary_json(*a.ece) : ojson(nullptr);
    j["count"] = a.count;
    return j;
}

ojson aggregate_pair_json(const AggregateReport& single, const AggregateReport& per_class) {
    ojson j = aggregate_json(single);
    ojson pc;
    pc["auroc"] = summary_json(per_class.auroc);
    pc["aupr"] = summary_json(per_class.aupr);
    pc["fpr95"] = summary_json(per_class.fpr95);
    j["per_class"] = pc;
    return j;
}

// Summaries of per-seed means, shaped as reports so aggregate() applies.
EvalReport means_as_report(const AggregateReport& a) {
    EvalReport r;
    r.auroc = a.auroc.mean;
    r.aupr = a.aupr.mean;
    r.fpr95 = a.fpr95.mean;
    if (a.ece) r.ece = a.ece->mean;
    return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    os << text;
    if (!os) fail(ErrorKind::io, "failed writing " + path.string());
}

std::string file_stem(std::uint64_t seed, const std::string& name) {
    std::string safe;
    for (char c : name) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
        safe += ok ? c : '_';
    }
    return "seed" + std::to_string(seed) + "_" + safe;
}

double in_test_ece(std::span<const ScoredSample> scored, std::size_t bins) {
    const auto rel = in_distribution_reliability(scored, bins);
    if (!rel) fail(ErrorKind::precondition, "in-distribution test set has no labels");
    return ece(*rel, rel->total());
}

}  // namespace

void RunSpec::validate() const {
    detector.validate();
    if (seeds.empty()) fail(ErrorKind::parameter, "at least one seed is required");
    if (bins == 0) fail(ErrorKind::parameter, "bin count must be >= 1");
}

EvalResult run_eval(const LoadedDatasets& data, const ClassStats& stats, const RunSpec& spec) {
    spec.validate();
    if (stats.num_classes != data.num_classes) {
        fail(ErrorKind::shape, "statistics have " + std::to_string(stats.num_classes) +
                                   " classes, datasets have " + std::to_string(data.num_classes));
    }
    if (data.ood.empty()) fail(ErrorKind::precondition, "no OoD datasets to evaluate");

    EvalResult result;
    result.spec = spec;
    result.num_classes = data.num_classes;

    std::vector<EvalReport> seed_single, seed_per_class;
    for (const auto seed : spec.seeds) {
        SeedRun run;
        run.seed = seed;
        std::vector<EvalReport> singles, per_classes;
        for (const auto& ood : data.ood) {
            const LogitSet ood_sets[] = {ood.records};
            const auto stream = build_test_stream(data.in_test.records, ood_sets, seed);
            const auto scored = score_stream(stream, stats, spec.detector);

            DatasetBlock block;
            block.name = ood.name;
            block.single = single_group_eval(scored);
            block.per_class = multi_threshold_eval(scored, data.num_classes);
            block.reliability = in_distribution_reliability(scored, spec.bins);
            if (block.reliability) {
                block.single.ece = ece(*block.reliability, block.reliability->total());
            }
            singles.push_back(block.single);
            per_classes.push_back(block.per_class);
            run.datasets.push_back(std::move(block));
        }
        run.single = aggregate(singles);
        run.per_class = aggregate(per_classes);
        seed_single.push_back(means_as_report(run.single));
        seed_per_class.push_back(means_as_report(run.per_class));
        result.runs.push_back(std::move(run));
    }
    result.single = aggregate(seed_single);
    result.per_class = aggregate(seed_per_class);
    return result;
}

std::string eval_report_json(const EvalResult& result) {
    const auto& d = result.spec.detector;
    ojson meta;
    meta["variant"] = d.variant_name();
    meta["detector"] = std::string(to_string(d.score_kind));
    meta["scaling"] = std::string(to_string(d.scaling));
    meta["tau"] = d.tau;
    meta["stats_mode"] = std::string(to_string(d.stats_mode));
    meta["prediction_source"] = std::string(to_string(d.prediction_source));
    meta["epsilon"] = d.epsilon;
    meta["bins"] = result.spec.bins;
    meta["num_classes"] = result.num_classes;
    meta["positive_class"] = "in_distribution";
    meta["aupr_flavor"] = "aupr_in";
    meta["fpr_target_tpr"] = 0.95;
    meta["stream_update_order"] = "update_then_scale";
    meta["shuffle_generator"] = shuffle_generator_id();
    meta["seed_semantics"] = "seeds drive test-stream shuffling";
    meta["seeds"] = result.spec.seeds;

    ojson runs = ojson::array();
    for (const auto& run : result.runs) {
        ojson datasets = ojson::array();
        for (const auto& b : run.datasets) {
            ojson block;
            block["name"] = b.name;
            block["auroc"] = b.single.auroc;
            block["aupr"] = b.single.aupr;
            block["fpr95"] = b.single.fpr95;
            block["ece"] = b.single.ece ? ojson(*b.single.ece) : ojson(nullptr);
            block["n_in"] = b.single.n_in;
            block["n_out"] = b.single.n_out;
            ojson pc;
            pc["auroc"] = b.per_class.auroc;
            pc["aupr"] = b.per_class.aupr;
            pc["fpr95"] = b.per_class.fpr95;
            pc["groups_used"] = b.per_class.groups_used;
            block["per_class"] = pc;
            datasets.push_back(std::move(block));
        }
        ojson r;
        r["seed"] = run.seed;
        r["datasets"] = std::move(datasets);
        r["aggregate"] = aggregate_pair_json(run.single, run.per_class);
        runs.push_back(std::move(r));
    }

    ojson doc;
    doc["metadata"] = meta;
    doc["runs"] = std::move(runs);
    doc["aggregate"] = aggregate_pair_json(result.single, result.per_class);
    return doc.dump(2) + "\n";
}

void write_eval_outputs(const std::filesystem::path& dir, const EvalResult& result) {
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", eval_report_json(result));
    for (const auto& run : result.runs) {
        for (const auto& b : run.datasets) {
            const auto stem = file_stem(run.seed, b.name);
            write_text(dir / ("roc_" + stem + ".csv"), roc_to_csv(b.single.roc));
            write_text(dir / ("pr_" + stem + ".csv"), pr_to_csv(b.single.pr));
            if (b.reliability) {
                write_text(dir / ("reliability_" + stem + ".csv"), reliability_to_csv(*b.reliability));
            }
        }
    }
}

std::vector<double> default_tau_grid() {
    constexpr int kPoints = 24;
    std::vector<double> grid(kPoints);
    for (int k = 0; k < kPoints; ++k) {
        grid[k] = std::pow(10.0, -1.0 + 3.0 * k / (kPoints - 1));
    }
    return grid;
}

std::vector<SweepRow> sweep_tau(const LogitSet& in_test, const ClassStats& stats,
                                const RunSpec& spec, const std::vector<double>& grid) {
    spec.validate();
    if (grid.empty()) fail(ErrorKind::parameter, "tau grid is empty");
    for (const auto& r : in_test) {
        if (!r.label) fail(ErrorKind::precondition, "sweep-tau needs a fully labeled in-distribution test set");
    }
    if (in_test.empty()) fail(ErrorKind::precondition, "in-distribution test set is empty");

    const bool running = spec.detector.stats_mode != StatsMode::frozen;
    const LogitSet stream = running ? build_test_stream(in_test, {}, spec.seeds.front()) : in_test;

    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (const double tau : grid) {
        DetectorConfig norm = spec.detector;
        norm.scaling = Scaling::tau_norm;
        norm.tau = tau;
        DetectorConfig temp = spec.detector;
        temp.scaling = Scaling::temp;
        temp.stats_mode = StatsMode::frozen;
        temp.tau = tau;

        SweepRow row;
        row.tau = tau;
        row.ece_norm = in_test_ece(score_stream(stream, stats, norm), spec.bins);
        row.ece_temp = in_test_ece(score_stream(stream, stats, temp), spec.bins);
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "tau,ece_norm,ece_temp\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.tau, r.ece_norm, r.ece_temp);
        out += buf;
    }
    return out;
}

DatasetManifest write_synth(const SynthConfig& config, const std::filesystem::path& dir,
                            LogitFormat format) {
    const auto data = generate(config);
    std::filesystem::create_directories(dir);
    const std::string ext = format == LogitFormat::bin ? ".bin" : ".csv";

    DatasetManifest manifest;
    manifest.base_dir = dir;
    auto emit = [&](const std::string& name, Origin role, const LogitSet& set) {
        const std::string file = name + ext;
        write_logits(dir / file, format, set);
        manifest.entries.push_back({name, role, file, format});
    };
    emit("train", Origin::train, data.train);
    emit("in_test", Origin::in_test, data.in_test);
    emit("ood", Origin::ood_test, data.ood_test);
    write_manifest(dir / "manifest.json", manifest);
    return manifest;
}

int exit_code_for(const Error& e) noexcept {
    return e.kind() == ErrorKind::metric ? kExitMetric : kExitInput;
}

}  // namespace normscale
