#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "normscale/detector.hpp"
#include "normscale/error.hpp"
#include "normscale/ingest.hpp"
#include "normscale/metrics.hpp"
#include "normscale/stats.hpp"
#include "normscale/synthgen.hpp"

namespace normscale {

struct RunSpec {
    DetectorConfig detector;
    // Seeds drive the test-stream shuffle (model training is out of scope).
    std::vector<std::uint64_t> seeds{0};
    std::size_t bins = kDefaultBins;

    void validate() const;
};

struct DatasetBlock {
    std::string name;
    EvalReport single;
    EvalReport per_class;
    std::optional<ReliabilityBins> reliability;
};

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<DatasetBlock> datasets;
    AggregateReport single;
    AggregateReport per_class;
};

struct EvalResult {
    RunSpec spec;
    std::size_t num_classes = 0;
    std::vector<SeedRun> runs;
    // Mean/std over seeds of the per-seed OoD-dataset averages.
    AggregateReport single;
    AggregateReport per_class;
};

// For every seed and OoD set: shuffle in_test + that OoD set, score the
// stream, evaluate with one threshold and per predicted class.
EvalResult run_eval(const LoadedDatasets& data, const ClassStats& stats, const RunSpec& spec);

std::string eval_report_json(const EvalResult& result);

// report.json plus roc/pr/reliability CSVs per (seed, dataset).
void write_eval_outputs(const std::filesystem::path& dir, const EvalResult& result);

struct SweepRow {
    double tau = 1.0;
    double ece_norm = 0.0;
    double ece_temp = 0.0;
};

// 24 log-spaced temperatures from 0.1 to 100.
std::vector<double> default_tau_grid();

// ECE of tau-norm and temperature scaling on the labeled in-distribution
// test set. Running statistics consume the set in the order given by the
// first seed's shuffle.
std::vector<SweepRow> sweep_tau(const LogitSet& in_test, const ClassStats& stats,
                                const RunSpec& spec, const std::vector<double>& grid);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// Writes train/in_test/ood_test logit files and manifest.json into dir.
DatasetManifest write_synth(const SynthConfig& config, const std::filesystem::path& dir,
                            LogitFormat format = LogitFormat::bin);

// Exit codes used by the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitMetric = 3;
int exit_code_for(const Error& e) noexcept;

}  // namespace normscale
