// normscale: command-line front end for fitting statistics, evaluating OoD
// detectors on logit dumps, sweeping temperatures and generating synthetic
// benchmarks.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "normscale/error.hpp"
#include "normscale/pipeline.hpp"

namespace ns = normscale;

namespace {

struct DetectorFlags {
    std::string detector = "msp";
    std::string scaling = "none";
    double tau = 1.0;
    std::string stats_mode = "frozen";
    std::string prediction_source = "unscaled";
    std::optional<double> epsilon;
    std::vector<std::uint64_t> seeds{0};
    std::size_t bins = ns::kDefaultBins;
};

void add_detector_flags(CLI::App* cmd, DetectorFlags& f, bool with_scoring) {
    if (with_scoring) {
        cmd->add_option("--detector", f.detector, "OoD score")
            ->check(CLI::IsMember({"msp", "energy"}));
        cmd->add_option("--scaling", f.scaling, "logit scaling")
            ->check(CLI::IsMember({"none", "norm", "tau-norm", "temp"}));
        cmd->add_option("--tau", f.tau, "temperature for tau-norm/temp scaling");
    }
    cmd->add_option("--stats-mode", f.stats_mode, "statistics used for norm scaling")
        ->check(CLI::IsMember({"frozen", "running-literal", "running-standard"}));
    cmd->add_option("--prediction-source", f.prediction_source, "logits used for the predicted class")
        ->check(CLI::IsMember({"unscaled", "scaled"}));
    cmd->add_option("--seeds", f.seeds, "comma separated shuffle seeds")->delimiter(',');
    cmd->add_option("--bins", f.bins, "reliability bin count")->check(CLI::PositiveNumber);
    cmd->add_option("--epsilon", f.epsilon, "sigma floor (default: stats file value or 1e-12)");
}

ns::RunSpec make_runspec(const DetectorFlags& f, double epsilon) {
    ns::RunSpec spec;
    spec.detector.score_kind = ns::score_kind_from_string(f.detector);
    spec.detector.scaling = ns::scaling_from_string(f.scaling);
    spec.detector.tau = f.tau;
    spec.detector.stats_mode = ns::stats_mode_from_string(f.stats_mode);
    spec.detector.prediction_source = ns::prediction_source_from_string(f.prediction_source);
    spec.detector.epsilon = epsilon;
    spec.seeds = f.seeds;
    spec.bins = f.bins;
    spec.validate();
    return spec;
}

// Statistics come from --stats when given, otherwise from the manifest's
// train split.
ns::StatsFile resolve_stats(const std::string& stats_path, const ns::LoadedDatasets& data,
                            const std::optional<double>& epsilon) {
    ns::StatsFile sf;
    if (!stats_path.empty()) {
        sf = ns::read_stats(stats_path);
    } else {
        sf.stats = ns::fit_class_stats(data.train);
    }
    if (epsilon) sf.epsilon = *epsilon;
    return sf;
}

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) ns::fail(ns::ErrorKind::io, "cannot open " + path + " for writing");
    os << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-class logit norm-scaling and OoD detection evaluation"};
    app.require_subcommand(1);

    // fit
    std::string fit_manifest, fit_input, fit_format, fit_out;
    double fit_epsilon = ns::kDefaultEpsilon;
    auto* fit = app.add_subcommand("fit", "fit per-class logit statistics on a training split");
    auto* fit_m = fit->add_option("--manifest", fit_manifest, "manifest whose train entry is fitted");
    auto* fit_i = fit->add_option("--input", fit_input, "training logit file");
    fit_m->excludes(fit_i);
    fit->add_option("--format", fit_format, "csv or bin (default: from extension)");
    fit->add_option("--epsilon", fit_epsilon, "sigma floor recorded in the statistics file");
    fit->add_option("--out", fit_out, "statistics JSON path (default: stdout)");

    // eval
    std::string eval_manifest, eval_stats, eval_out = "normscale_out";
    bool eval_write_scores = false;
    DetectorFlags eval_flags;
    auto* eval = app.add_subcommand("eval", "evaluate a detector variant on every OoD set");
    eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval->add_option("--stats", eval_stats, "statistics JSON (default: fit the train split)");
    add_detector_flags(eval, eval_flags, true);
    eval->add_option("--out", eval_out, "output directory");
    eval->add_flag("--write-scores", eval_write_scores, "also write per-sample score CSVs");

    // sweep-tau
    std::string sweep_manifest, sweep_stats, sweep_out;
    std::vector<double> sweep_grid;
    DetectorFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep-tau", "ECE of tau-norm vs temperature scaling over a tau grid");
    sweep->add_option("--manifest", sweep_manifest, "dataset manifest")->required();
    sweep->add_option("--stats", sweep_stats, "statistics JSON (default: fit the train split)");
    sweep->add_option("--grid", sweep_grid, "comma separated tau values (default: 24 log-spaced in [0.1, 100])")
        ->delimiter(',');
    add_detector_flags(sweep, sweep_flags, false);
    sweep->add_option("--out", sweep_out, "CSV path (default: stdout)");

    // synth
    std::string synth_config, synth_out = "synth", synth_format = "bin";
    std::optional<std::uint64_t> synth_seed;
    auto* synth = app.add_subcommand("synth", "generate a synthetic logit benchmark");
    synth->add_option("--config", synth_config, "synth.json (default: built-in fig1-like)");
    synth->add_option("--seed", synth_seed, "override the config seed");
    synth->add_option("--format", synth_format, "output logit format")
        ->check(CLI::IsMember({"bin", "csv"}));
    synth->add_option("--out", synth_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ns::kExitOk : ns::kExitInput;
    }

    try {
        if (*fit) {
            ns::LogitSet train;
            if (!fit_manifest.empty()) {
                const auto m = ns::read_manifest(fit_manifest);
                const auto& e = m.train();
                train = ns::read_logits(m.resolve(e), e.format, ns::Origin::train);
            } else if (!fit_input.empty()) {
                const auto fmt = fit_format.empty() ? ns::logit_format_from_path(fit_input)
                                                    : ns::logit_format_from_string(fit_format);
                train = ns::read_logits(fit_input, fmt, ns::Origin::train);
            } else {
                ns::fail(ns::ErrorKind::precondition, "fit needs --manifest or --input");
            }
            if (!(fit_epsilon > 0.0)) ns::fail(ns::ErrorKind::parameter, "epsilon must be > 0");
            write_or_print(fit_out, ns::stats_to_json(ns::fit_class_stats(train), fit_epsilon));
        } else if (*eval) {
            const auto data = ns::load_datasets(ns::read_manifest(eval_manifest));
            const auto sf = resolve_stats(eval_stats, data, eval_flags.epsilon);
            const auto spec = make_runspec(eval_flags, sf.epsilon);
            const auto result = ns::run_eval(data, sf.stats, spec);
            ns::write_eval_outputs(eval_out, result);
            if (eval_write_scores) {
                for (const auto seed : spec.seeds) {
                    for (const auto& ood : data.ood) {
                        const ns::LogitSet sets[] = {ood.records};
                        const auto stream = ns::build_test_stream(data.in_test.records, sets, seed);
                        const auto scored = ns::score_stream(stream, sf.stats, spec.detector);
                        ns::write_scored_csv(std::filesystem::path(eval_out) /
                                                 ("scores_seed" + std::to_string(seed) + "_" + ood.name + ".csv"),
                                             scored);
                    }
                }
            }
            const auto& a = result.single;
            const auto& pc = result.per_class;
            std::printf("%s  AUROC %.4f +- %.4f  AUPR %.4f +- %.4f  FPR95 %.4f +- %.4f\n",
                        spec.detector.variant_name().c_str(), a.auroc.mean, a.auroc.std,
                        a.aupr.mean, a.aupr.std, a.fpr95.mean, a.fpr95.std);
            std::printf("%s  per-class AUROC %.4f +- %.4f  AUPR %.4f +- %.4f  FPR95 %.4f +- %.4f\n",
                        spec.detector.variant_name().c_str(), pc.auroc.mean, pc.auroc.std,
                        pc.aupr.mean, pc.aupr.std, pc.fpr95.mean, pc.fpr95.std);
        } else if (*sweep) {
            const auto manifest = ns::read_manifest(sweep_manifest);
            const auto data = ns::load_datasets(manifest);
            const auto sf = resolve_stats(sweep_stats, data, sweep_flags.epsilon);
            DetectorFlags flags = sweep_flags;
            flags.scaling = "tau-norm";
            const auto spec = make_runspec(flags, sf.epsilon);
            const auto grid = sweep_grid.empty() ? ns::default_tau_grid() : sweep_grid;
            const auto rows = ns::sweep_tau(data.in_test.records, sf.stats, spec, grid);
            write_or_print(sweep_out, ns::sweep_to_csv(rows));
        } else if (*synth) {
            auto config = synth_config.empty() ? ns::fig1_like() : ns::read_synth_config(synth_config);
            if (synth_seed) config.seed = *synth_seed;
            ns::write_synth(config, synth_out, ns::logit_format_from_string(synth_format));
        }
    } catch (const ns::Error& e) {
        std::cerr << "normscale: " << ns::to_string(e.kind()) << ": " << e.what() << "\n";
        return ns::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "normscale: " << e.what() << "\n";
        return ns::kExitInput;
    }
    return ns::kExitOk;
}
