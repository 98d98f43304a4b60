#include "normscale/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>

#include "normscale/error.hpp"

namespace normscale {
namespace {

// Cumulative counts of positives/negatives at or above each distinct score,
// swept from the highest score down.
struct SweepStep {
    std::uint64_t tp;
    std::uint64_t fp;
};

void require_scores(const BinaryScoreSet& s) {
    if (s.in_scores.empty() || s.out_scores.empty()) {
        fail(ErrorKind::metric, "curve metrics need at least one in-distribution and one OoD score");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(s.in_scores.begin(), s.in_scores.end(), finite) ||
        !std::all_of(s.out_scores.begin(), s.out_scores.end(), finite)) {
        fail(ErrorKind::domain, "scores must be finite");
    }
}

std::vector<SweepStep> threshold_sweep(const BinaryScoreSet& s) {
    require_scores(s);
    std::vector<double> pos = s.in_scores;
    std::vector<double> neg = s.out_scores;
    std::sort(pos.begin(), pos.end(), std::greater<>());
    std::sort(neg.begin(), neg.end(), std::greater<>());

    std::vector<SweepStep> steps;
    std::size_t i = 0, j = 0;
    while (i < pos.size() || j < neg.size()) {
        double v;
        if (i == pos.size()) v = neg[j];
        else if (j == neg.size()) v = pos[i];
        else v = std::max(pos[i], neg[j]);
        while (i < pos.size() && pos[i] == v) ++i;
        while (j < neg.size() && neg[j] == v) ++j;
        steps.push_back({i, j});
    }
    return steps;
}

// x0 + sum(x - x0) / n: exact for constant sequences.
double stable_mean(std::span<const double> values) {
    const double anchor = values.front();
    double dev = 0.0;
    for (double v : values) dev += v - anchor;
    return anchor + dev / static_cast<double>(values.size());
}

EvalReport metrics_for(const BinaryScoreSet& set) {
    EvalReport r;
    r.auroc = auroc(set);
    r.aupr = aupr(set);
    r.fpr95 = fpr_at_tpr(set, 0.95);
    r.n_in = set.in_scores.size();
    r.n_out = set.out_scores.size();
    return r;
}

std::string points_to_csv(const char* header, std::span<const CurvePoint> points) {
    std::string out = header;
    char buf[80];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x, p.y);
        out += buf;
    }
    return out;
}

}  // namespace

BinaryScoreSet split_by_origin(std::span<const ScoredSample> scored) {
    BinaryScoreSet set;
    for (const auto& s : scored) {
        if (s.origin == Origin::ood_test) set.out_scores.push_back(s.score);
        else set.in_scores.push_back(s.score);
    }
    return set;
}

std::vector<CurvePoint> roc_points(const BinaryScoreSet& s) {
    const auto steps = threshold_sweep(s);
    const double n_pos = static_cast<double>(s.in_scores.size());
    const double n_neg = static_cast<double>(s.out_scores.size());
    std::vector<CurvePoint> points;
    points.reserve(steps.size() + 1);
    points.push_back({0.0, 0.0});
    for (const auto& st : steps) {
        points.push_back({static_cast<double>(st.fp) / n_neg, static_cast<double>(st.tp) / n_pos});
    }
    if (points.back() != CurvePoint{1.0, 1.0}) points.push_back({1.0, 1.0});
    return points;
}

std::vector<CurvePoint> pr_points(const BinaryScoreSet& s) {
    const auto steps = threshold_sweep(s);
    const double n_pos = static_cast<double>(s.in_scores.size());
    std::vector<CurvePoint> points;
    points.reserve(steps.size());
    for (const auto& st : steps) {
        const double precision = static_cast<double>(st.tp) / static_cast<double>(st.tp + st.fp);
        points.push_back({static_cast<double>(st.tp) / n_pos, precision});
    }
    return points;
}

double auroc(const BinaryScoreSet& s) {
    // Twice the trapezoid area in count units, which is exactly
    // 2 * #(in > out) + #(in == out).
    std::uint64_t twice_area = 0;
    SweepStep prev{0, 0};
    for (const auto& st : threshold_sweep(s)) {
        twice_area += (st.fp - prev.fp) * (st.tp + prev.tp);
        prev = st;
    }
    const double pairs = static_cast<double>(s.in_scores.size()) *
                         static_cast<double>(s.out_scores.size());
    return static_cast<double>(twice_area) / (2.0 * pairs);
}

double aupr(const BinaryScoreSet& s) {
    const double n_pos = static_cast<double>(s.in_scores.size());
    double area = 0.0;
    std::uint64_t prev_tp = 0;
    for (const auto& st : threshold_sweep(s)) {
        if (st.tp != prev_tp) {
            const double recall_step = static_cast<double>(st.tp - prev_tp) / n_pos;
            const double precision =
                static_cast<double>(st.tp) / static_cast<double>(st.tp + st.fp);
            area += recall_step * precision;
            prev_tp = st.tp;
        }
    }
    return area;
}

double fpr_at_tpr(const BinaryScoreSet& s, double target) {
    if (!(target > 0.0 && target <= 1.0)) {
        fail(ErrorKind::parameter, "target TPR must lie in (0, 1]");
    }
    const double n_pos = static_cast<double>(s.in_scores.size());
    const double n_neg = static_cast<double>(s.out_scores.size());
    // FPR is non-decreasing along the sweep, so the first hit is the minimum.
    for (const auto& st : threshold_sweep(s)) {
        if (static_cast<double>(st.tp) / n_pos >= target) {
            return static_cast<double>(st.fp) / n_neg;
        }
    }
    return 1.0;
}

std::size_t ReliabilityBins::total() const noexcept {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.count;
    return n;
}

std::size_t bin_index(double confidence, std::size_t num_bins) {
    if (num_bins == 0) fail(ErrorKind::parameter, "bin count must be >= 1");
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        fail(ErrorKind::domain, "confidence must lie in [0, 1]");
    }
    const double m_total = static_cast<double>(num_bins);
    auto upper = [&](std::size_t m) { return static_cast<double>(m) / m_total; };

    // ceil(p*M) can land one off on exact boundaries; settle against m/M.
    auto m = static_cast<std::size_t>(std::ceil(confidence * m_total));
    m = std::clamp<std::size_t>(m, 1, num_bins);
    while (m > 1 && confidence <= upper(m - 1)) --m;
    while (m < num_bins && confidence > upper(m)) ++m;
    return m;
}

ReliabilityBins reliability(std::span<const double> confidences, const std::vector<bool>& correct,
                            std::size_t num_bins) {
    if (confidences.size() != correct.size()) {
        fail(ErrorKind::shape, "confidences and correctness flags differ in length");
    }
    if (num_bins == 0) fail(ErrorKind::parameter, "bin count must be >= 1");

    // Accumulate in sorted order so the sums do not depend on input order.
    std::vector<std::size_t> order(confidences.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (confidences[a] != confidences[b]) return confidences[a] < confidences[b];
        return correct[a] < correct[b];
    });

    std::vector<double> conf_sum(num_bins, 0.0);
    std::vector<std::size_t> hits(num_bins, 0);
    ReliabilityBins out;
    out.num_bins = num_bins;
    out.bins.resize(num_bins);
    for (std::size_t i : order) {
        const std::size_t m = bin_index(confidences[i], num_bins) - 1;
        out.bins[m].count += 1;
        conf_sum[m] += confidences[i];
        hits[m] += correct[i] ? 1 : 0;
    }
    for (std::size_t m = 0; m < num_bins; ++m) {
        auto& b = out.bins[m];
        if (b.count == 0) continue;
        b.acc = static_cast<double>(hits[m]) / static_cast<double>(b.count);
        b.conf = conf_sum[m] / static_cast<double>(b.count);
    }
    return out;
}

double ece(const ReliabilityBins& bins, std::size_t n) {
    if (bins.total() != n) {
        fail(ErrorKind::consistency, "sample count does not match the reliability bin counts");
    }
    if (n == 0) fail(ErrorKind::metric, "ECE of an empty set is undefined");
    double total = 0.0;
    for (const auto& b : bins.bins) {
        if (b.count == 0) continue;
        total += static_cast<double>(b.count) / static_cast<double>(n) * std::abs(*b.acc - *b.conf);
    }
    return total;
}

EvalReport single_group_eval(std::span<const ScoredSample> scored) {
    const auto set = split_by_origin(scored);
    EvalReport r = metrics_for(set);
    r.grouping = Grouping::single;
    r.roc = roc_points(set);
    r.pr = pr_points(set);
    r.groups_used = 1;
    return r;
}

EvalReport multi_threshold_eval(std::span<const ScoredSample> scored, std::size_t num_classes) {
    if (num_classes == 0) fail(ErrorKind::parameter, "num_classes must be >= 1");
    std::vector<BinaryScoreSet> groups(num_classes);
    std::size_t n_in = 0, n_out = 0;
    for (const auto& s : scored) {
        if (s.predicted_class >= num_classes) {
            fail(ErrorKind::shape, "predicted class " + std::to_string(s.predicted_class) +
                                       " outside [0, " + std::to_string(num_classes) + ")");
        }
        auto& g = groups[s.predicted_class];
        if (s.origin == Origin::ood_test) {
            g.out_scores.push_back(s.score);
            ++n_out;
        } else {
            g.in_scores.push_back(s.score);
            ++n_in;
        }
    }

    std::vector<double> aurocs, auprs, fprs;
    for (const auto& g : groups) {
        if (g.in_scores.empty() || g.out_scores.empty()) continue;
        const auto r = metrics_for(g);
        aurocs.push_back(r.auroc);
        auprs.push_back(r.aupr);
        fprs.push_back(r.fpr95);
    }
    if (aurocs.empty()) {
        fail(ErrorKind::metric, "no predicted-class group contains both in-distribution and OoD samples");
    }

    EvalReport r;
    r.grouping = Grouping::per_class;
    r.auroc = stable_mean(aurocs);
    r.aupr = stable_mean(auprs);
    r.fpr95 = stable_mean(fprs);
    r.n_in = n_in;
    r.n_out = n_out;
    r.groups_used = aurocs.size();
    return r;
}

std::optional<ReliabilityBins> in_distribution_reliability(std::span<const ScoredSample> scored,
                                                           std::size_t num_bins) {
    std::vector<double> conf;
    std::vector<bool> correct;
    for (const auto& s : scored) {
        if (s.origin == Origin::ood_test || !s.label) continue;
        conf.push_back(s.confidence);
        correct.push_back(*s.label == s.predicted_class);
    }
    if (conf.empty()) return std::nullopt;
    return reliability(conf, correct, num_bins);
}

MetricSummary summarize(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::parameter, "cannot summarize an empty sequence");
    MetricSummary out;
    out.mean = stable_mean(values);
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size()));
    return out;
}

AggregateReport aggregate(std::span<const EvalReport> reports) {
    if (reports.empty()) fail(ErrorKind::parameter, "cannot aggregate zero reports");
    std::vector<double> a, p, f, e;
    for (const auto& r : reports) {
        a.push_back(r.auroc);
        p.push_back(r.aupr);
        f.push_back(r.fpr95);
        if (r.ece) e.push_back(*r.ece);
    }
    AggregateReport out;
    out.auroc = summarize(a);
    out.aupr = summarize(p);
    out.fpr95 = summarize(f);
    if (e.size() == reports.size()) out.ece = summarize(e);
    out.count = reports.size();
    return out;
}

std::string roc_to_csv(std::span<const CurvePoint> roc) { return points_to_csv("fpr,tpr\n", roc); }

std::string pr_to_csv(std::span<const CurvePoint> pr) {
    return points_to_csv("recall,precision\n", pr);
}

std::string reliability_to_csv(const ReliabilityBins& bins) {
    std::string out = "bin,count,acc,conf\n";
    char buf[96];
    for (std::size_t m = 0; m < bins.bins.size(); ++m) {
        const auto& b = bins.bins[m];
        if (b.count == 0) {
            std::snprintf(buf, sizeof buf, "%zu,0,,\n", m + 1);
        } else {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", m + 1, b.count, *b.acc, *b.conf);
        }
        out += buf;
    }
    return out;
}

}  // namespace normscale
