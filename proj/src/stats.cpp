#include "normscale/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "normscale/error.hpp"

namespace normscale {
namespace {

void require_width(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        fail(ErrorKind::shape, std::string(what) + ": expected " + std::to_string(want) +
                                   " logits, got " + std::to_string(got));
    }
}

void require_positive_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        fail(ErrorKind::parameter, "tau must be a positive finite number");
    }
}

// Summing a sorted copy makes the result independent of record order.
double sorted_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    return total;
}

}  // namespace

std::string_view to_string(StreamMode mode) noexcept {
    return mode == StreamMode::literal ? "literal" : "standard";
}

ClassStats fit_class_stats(std::span<const LogitRecord> train) {
    if (train.empty()) fail(ErrorKind::fit, "cannot fit class statistics on an empty set");

    const std::size_t n_classes = train.front().width();
    if (n_classes == 0) fail(ErrorKind::shape, "records have zero logits");
    for (std::size_t i = 0; i < train.size(); ++i) {
        require_width(train[i].width(), n_classes, "fit_class_stats");
        for (double z : train[i].logits) {
            if (!std::isfinite(z)) {
                fail(ErrorKind::domain, "non-finite logit in record " + std::to_string(i));
            }
        }
    }

    const double count = static_cast<double>(train.size());
    ClassStats stats;
    stats.num_classes = n_classes;
    stats.sample_count = train.size();
    stats.mu.resize(n_classes);
    stats.sigma.resize(n_classes);

    std::vector<double> column(train.size());
    for (std::size_t j = 0; j < n_classes; ++j) {
        for (std::size_t k = 0; k < train.size(); ++k) column[k] = train[k].logits[j];
        const double mean = sorted_sum(column) / count;
        for (std::size_t k = 0; k < train.size(); ++k) {
            const double d = train[k].logits[j] - mean;
            column[k] = d * d;
        }
        stats.mu[j] = mean;
        stats.sigma[j] = std::sqrt(sorted_sum(column) / count);
    }
    return stats;
}

std::vector<double> norm_scale(std::span<const double> logits, const ClassStats& stats,
                               double epsilon) {
    require_width(logits.size(), stats.num_classes, "norm_scale");
    std::vector<double> out(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = (logits[j] - stats.mu[j]) / std::max(stats.sigma[j], epsilon);
    }
    return out;
}

std::vector<double> tau_norm_scale(std::span<const double> logits, const ClassStats& stats,
                                   double tau, double epsilon) {
    require_positive_tau(tau);
    auto out = norm_scale(logits, stats, epsilon);
    for (double& v : out) v /= tau;
    return out;
}

std::vector<double> temperature_scale(std::span<const double> logits, double tau) {
    require_positive_tau(tau);
    std::vector<double> out(logits.begin(), logits.end());
    for (double& v : out) v /= tau;
    return out;
}

StreamState stream_init(const ClassStats& stats, StreamMode mode) {
    StreamState state;
    state.base = stats;
    state.t = 0;
    state.mu_t = stats.mu;
    state.var_t.resize(stats.sigma.size());
    for (std::size_t j = 0; j < stats.sigma.size(); ++j) {
        state.var_t[j] = stats.sigma[j] * stats.sigma[j];
    }
    state.mode = mode;
    return state;
}

void stream_update_inplace(StreamState& state, std::span<const double> logits) {
    require_width(logits.size(), state.mu_t.size(), "stream_update");
    const std::size_t t = state.t + 1;
    const double divisor = static_cast<double>(t + 1);

    if (state.mode == StreamMode::literal) {
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double mu = (state.mu_t[j] + logits[j]) / divisor;
            const double dev = logits[j] - mu;
            state.mu_t[j] = mu;
            state.var_t[j] = (state.var_t[j] + dev * dev) / divisor;
        }
    } else {
        // t samples plus the training pseudo-sample have been seen so far.
        const double seen = static_cast<double>(t);
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double delta = logits[j] - state.mu_t[j];
            const double mu = state.mu_t[j] + delta / divisor;
            const double var = (seen * state.var_t[j] + delta * (logits[j] - mu)) / divisor;
            state.mu_t[j] = mu;
            state.var_t[j] = std::max(var, 0.0);
        }
    }
    state.t = t;
}

StreamState stream_update(StreamState state, std::span<const double> logits) {
    stream_update_inplace(state, logits);
    return state;
}

std::vector<double> stream_scale(std::span<const double> logits, const StreamState& state,
                                 double tau, double epsilon) {
    require_positive_tau(tau);
    require_width(logits.size(), state.mu_t.size(), "stream_scale");
    std::vector<double> out(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        const double sigma = std::sqrt(std::max(state.var_t[j], 0.0));
        out[j] = (logits[j] - state.mu_t[j]) / std::max(sigma, epsilon);
    }
    if (tau != 1.0) {
        for (double& v : out) v /= tau;
    }
    return out;
}

std::string stats_to_json(const ClassStats& stats, double epsilon) {
    nlohmann::ordered_json doc;
    doc["num_classes"] = stats.num_classes;
    doc["mu"] = stats.mu;
    doc["sigma"] = stats.sigma;
    doc["sample_count"] = stats.sample_count;
    doc["epsilon"] = epsilon;
    return doc.dump(2) + "\n";
}

StatsFile stats_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::parse, std::string("statistics file: ") + e.what());
    }

    StatsFile out;
    try {
        out.stats.num_classes = doc.at("num_classes").get<std::size_t>();
        out.stats.mu = doc.at("mu").get<std::vector<double>>();
        out.stats.sigma = doc.at("sigma").get<std::vector<double>>();
        out.stats.sample_count = doc.at("sample_count").get<std::size_t>();
        out.epsilon = doc.value("epsilon", kDefaultEpsilon);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("statistics file: ") + e.what());
    }

    const auto& s = out.stats;
    if (s.num_classes == 0 || s.mu.size() != s.num_classes || s.sigma.size() != s.num_classes) {
        fail(ErrorKind::shape, "statistics file: mu/sigma length must equal num_classes");
    }
    if (s.sample_count == 0) fail(ErrorKind::parse, "statistics file: sample_count must be >= 1");
    for (double sd : s.sigma) {
        if (!(sd >= 0.0)) fail(ErrorKind::parse, "statistics file: sigma must be non-negative");
    }
    if (!(out.epsilon > 0.0)) fail(ErrorKind::parameter, "statistics file: epsilon must be > 0");
    return out;
}

void write_stats(const std::filesystem::path& path, const ClassStats& stats, double epsilon) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    os << stats_to_json(stats, epsilon);
    if (!os) fail(ErrorKind::io, "failed writing " + path.string());
}

StatsFile read_stats(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return stats_from_json(buf.str());
}

}  // namespace normscale
