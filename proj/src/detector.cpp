#include "normscale/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "normscale/error.hpp"

namespace normscale {
namespace {

void require_finite(std::span<const double> logits) {
    if (logits.empty()) fail(ErrorKind::shape, "empty logit vector");
    for (double z : logits) {
        if (!std::isfinite(z)) fail(ErrorKind::domain, "non-finite logit");
    }
}

std::vector<double> apply_scaling(std::span<const double> logits, const ClassStats& stats,
                                  const DetectorConfig& config, const StreamState* stream) {
    switch (config.scaling) {
        case Scaling::none:
            return {logits.begin(), logits.end()};
        case Scaling::norm:
            return stream ? stream_scale(logits, *stream, 1.0, config.epsilon)
                          : norm_scale(logits, stats, config.epsilon);
        case Scaling::tau_norm:
            return stream ? stream_scale(logits, *stream, config.tau, config.epsilon)
                          : tau_norm_scale(logits, stats, config.tau, config.epsilon);
        case Scaling::temp:
            return temperature_scale(logits, config.tau);
    }
    return {logits.begin(), logits.end()};
}

}  // namespace

std::string_view to_string(ScoreKind v) noexcept {
    return v == ScoreKind::msp ? "msp" : "energy";
}

std::string_view to_string(Scaling v) noexcept {
    switch (v) {
        case Scaling::none: return "none";
        case Scaling::norm: return "norm";
        case Scaling::tau_norm: return "tau-norm";
        case Scaling::temp: return "temp";
    }
    return "none";
}

std::string_view to_string(StatsMode v) noexcept {
    switch (v) {
        case StatsMode::frozen: return "frozen";
        case StatsMode::running_literal: return "running-literal";
        case StatsMode::running_standard: return "running-standard";
    }
    return "frozen";
}

std::string_view to_string(PredictionSource v) noexcept {
    return v == PredictionSource::unscaled_logits ? "unscaled" : "scaled";
}

ScoreKind score_kind_from_string(std::string_view s) {
    if (s == "msp") return ScoreKind::msp;
    if (s == "energy") return ScoreKind::energy;
    fail(ErrorKind::parameter, "unknown detector '" + std::string(s) + "'");
}

Scaling scaling_from_string(std::string_view s) {
    if (s == "none") return Scaling::none;
    if (s == "norm") return Scaling::norm;
    if (s == "tau-norm" || s == "tau_norm") return Scaling::tau_norm;
    if (s == "temp") return Scaling::temp;
    fail(ErrorKind::parameter, "unknown scaling '" + std::string(s) + "'");
}

StatsMode stats_mode_from_string(std::string_view s) {
    if (s == "frozen") return StatsMode::frozen;
    if (s == "running-literal" || s == "running_literal") return StatsMode::running_literal;
    if (s == "running-standard" || s == "running_standard") return StatsMode::running_standard;
    fail(ErrorKind::parameter, "unknown stats mode '" + std::string(s) + "'");
}

PredictionSource prediction_source_from_string(std::string_view s) {
    if (s == "unscaled" || s == "unscaled_logits") return PredictionSource::unscaled_logits;
    if (s == "scaled" || s == "scaled_logits") return PredictionSource::scaled_logits;
    fail(ErrorKind::parameter, "unknown prediction source '" + std::string(s) + "'");
}

void DetectorConfig::validate() const {
    if ((scaling == Scaling::tau_norm || scaling == Scaling::temp) &&
        !(tau > 0.0 && std::isfinite(tau))) {
        fail(ErrorKind::parameter, "tau must be > 0 for tau-norm and temp scaling");
    }
    if (stats_mode != StatsMode::frozen && scaling != Scaling::norm &&
        scaling != Scaling::tau_norm) {
        fail(ErrorKind::parameter, "running statistics require norm or tau-norm scaling");
    }
    if (!(epsilon > 0.0)) fail(ErrorKind::parameter, "epsilon must be > 0");
}

std::string DetectorConfig::variant_name() const {
    std::string name(to_string(score_kind));
    name += "/";
    name += to_string(scaling);
    if (scaling == Scaling::norm || scaling == Scaling::tau_norm) {
        name += "/";
        name += to_string(stats_mode);
    }
    return name;
}

std::vector<double> softmax(std::span<const double> logits) {
    require_finite(logits);
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        p[j] = std::exp(logits[j] - top);
        sum += p[j];
    }
    for (double& v : p) v /= sum;
    return p;
}

ClassIndex argmax(std::span<const double> logits) {
    if (logits.empty()) fail(ErrorKind::shape, "argmax of empty vector");
    return static_cast<ClassIndex>(std::max_element(logits.begin(), logits.end()) -
                                   logits.begin());
}

MspResult msp_score(std::span<const double> logits) {
    const auto p = softmax(logits);
    const ClassIndex k = argmax(p);
    return {k, p[k]};
}

double energy_score(std::span<const double> logits, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorKind::parameter, "tau must be > 0");
    require_finite(logits);
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp((z - top) / tau);
    return top + tau * std::log(sum);
}

std::vector<ScoredSample> score_stream(std::span<const LogitRecord> records,
                                       const ClassStats& stats, const DetectorConfig& config) {
    config.validate();

    std::optional<StreamState> stream;
    if (config.stats_mode != StatsMode::frozen) {
        stream = stream_init(stats, config.stats_mode == StatsMode::running_literal
                                        ? StreamMode::literal
                                        : StreamMode::standard);
    }

    std::vector<ScoredSample> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        require_finite(rec.logits);
        if (config.scaling != Scaling::none && config.scaling != Scaling::temp &&
            rec.width() != stats.num_classes) {
            fail(ErrorKind::shape, "record width " + std::to_string(rec.width()) +
                                       " does not match statistics width " +
                                       std::to_string(stats.num_classes));
        }
        if (stream) stream_update_inplace(*stream, rec.logits);

        const auto scaled = apply_scaling(rec.logits, stats, config, stream ? &*stream : nullptr);
        const auto msp = msp_score(scaled);

        ScoredSample s;
        s.score_kind = config.score_kind;
        s.origin = rec.origin;
        s.label = rec.label;
        s.confidence = msp.score;
        s.predicted_class = config.prediction_source == PredictionSource::unscaled_logits
                                ? argmax(rec.logits)
                                : msp.predicted_class;
        s.score = config.score_kind == ScoreKind::msp ? msp.score : energy_score(scaled, 1.0);
        out.push_back(s);
    }
    return out;
}

std::string scored_to_csv(std::span<const ScoredSample> scored) {
    std::string out = "origin,predicted_class,score\n";
    char buf[64];
    for (const auto& s : scored) {
        std::snprintf(buf, sizeof buf, ",%zu,%.9g\n", s.predicted_class, s.score);
        out += to_string(s.origin);
        out += buf;
    }
    return out;
}

void write_scored_csv(const std::filesystem::path& path, std::span<const ScoredSample> scored) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    os << scored_to_csv(scored);
}

}  // namespace normscale
