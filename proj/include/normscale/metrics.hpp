#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "normscale/detector.hpp"

namespace normscale {

// Positives are in-distribution samples throughout: TPR is the fraction of
// in-distribution scores kept, precision is measured on the in-distribution
// class (AUPR-In).
struct BinaryScoreSet {
    std::vector<double> in_scores;
    std::vector<double> out_scores;
};

BinaryScoreSet split_by_origin(std::span<const ScoredSample> scored);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const CurvePoint&) const = default;
};

// (FPR, TPR) for every distinct score taken as a threshold (descending),
// anchored at (0,0) and (1,1). A sample is predicted positive when
// score >= threshold.
std::vector<CurvePoint> roc_points(const BinaryScoreSet& s);

// (recall, precision) at every distinct threshold, descending.
std::vector<CurvePoint> pr_points(const BinaryScoreSet& s);

double auroc(const BinaryScoreSet& s);
double aupr(const BinaryScoreSet& s);
double fpr_at_tpr(const BinaryScoreSet& s, double target = 0.95);

struct ReliabilityBin {
    std::size_t count = 0;
    std::optional<double> acc;
    std::optional<double> conf;
};

// Bin m (1-based) holds confidences in ((m-1)/M, m/M]; zero goes to bin 1.
struct ReliabilityBins {
    std::size_t num_bins = 0;
    std::vector<ReliabilityBin> bins;

    std::size_t total() const noexcept;
};

inline constexpr std::size_t kDefaultBins = 15;

std::size_t bin_index(double confidence, std::size_t num_bins);
ReliabilityBins reliability(std::span<const double> confidences, const std::vector<bool>& correct,
                            std::size_t num_bins = kDefaultBins);
double ece(const ReliabilityBins& bins, std::size_t n);

enum class Grouping { single, per_class };

struct EvalReport {
    Grouping grouping = Grouping::single;
    double auroc = 0.0;
    double aupr = 0.0;
    double fpr95 = 0.0;
    std::optional<double> ece;
    std::vector<CurvePoint> roc;
    std::vector<CurvePoint> pr;
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    // Number of class groups that contributed (1 for single grouping).
    std::size_t groups_used = 1;
};

EvalReport single_group_eval(std::span<const ScoredSample> scored);

// Groups samples by predicted class, evaluates each group that contains both
// origins and averages the groups with equal weight.
EvalReport multi_threshold_eval(std::span<const ScoredSample> scored, std::size_t num_classes);

// Reliability over the labeled in-distribution samples of a scored stream;
// empty optional when none are labeled.
std::optional<ReliabilityBins> in_distribution_reliability(std::span<const ScoredSample> scored,
                                                           std::size_t num_bins);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;
};

MetricSummary summarize(std::span<const double> values);

struct AggregateReport {
    MetricSummary auroc;
    MetricSummary aupr;
    MetricSummary fpr95;
    std::optional<MetricSummary> ece;
    std::size_t count = 0;
};

// Mean and population std per metric. ECE is summarized only when every
// report carries one.
AggregateReport aggregate(std::span<const EvalReport> reports);

std::string roc_to_csv(std::span<const CurvePoint> roc);
std::string pr_to_csv(std::span<const CurvePoint> pr);
std::string reliability_to_csv(const ReliabilityBins& bins);

}  // namespace normscale
