#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "normscale/records.hpp"

namespace normscale {

inline constexpr double kDefaultEpsilon = 1e-12;

// Per-class logit mean and population standard deviation fitted on the
// training split. Every class column is fitted over all training records.
struct ClassStats {
    std::size_t num_classes = 0;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::size_t sample_count = 0;
};

ClassStats fit_class_stats(std::span<const LogitRecord> train);

// (z - mu) / max(sigma, epsilon), per column.
std::vector<double> norm_scale(std::span<const double> logits, const ClassStats& stats,
                               double epsilon = kDefaultEpsilon);

// norm_scale followed by a division by tau. tau == 1 is bit-identical to
// norm_scale.
std::vector<double> tau_norm_scale(std::span<const double> logits, const ClassStats& stats,
                                   double tau, double epsilon = kDefaultEpsilon);

std::vector<double> temperature_scale(std::span<const double> logits, double tau);

/// Running-statistics update rule.
///
/// `literal` applies mu_t = (mu_{t-1} + z) / (t + 1) and
/// var_t = (var_{t-1} + (z - mu_t)^2) / (t + 1) exactly as written, which
/// discounts history geometrically. `standard` treats the training mean as a
/// single pseudo-sample and keeps an exact running average with a Welford
/// style variance update.
enum class StreamMode { literal, standard };

std::string_view to_string(StreamMode mode) noexcept;

struct StreamState {
    ClassStats base;
    std::size_t t = 0;
    std::vector<double> mu_t;
    std::vector<double> var_t;
    StreamMode mode = StreamMode::literal;
};

StreamState stream_init(const ClassStats& stats, StreamMode mode);

// Folds one test sample into every class column and advances t by one.
StreamState stream_update(StreamState state, std::span<const double> logits);
void stream_update_inplace(StreamState& state, std::span<const double> logits);

// Scales with the current running statistics (sigma_t = sqrt(var_t)).
std::vector<double> stream_scale(std::span<const double> logits, const StreamState& state,
                                 double tau = 1.0, double epsilon = kDefaultEpsilon);

// Statistics file: {num_classes, mu, sigma, sample_count, epsilon}.
struct StatsFile {
    ClassStats stats;
    double epsilon = kDefaultEpsilon;
};

std::string stats_to_json(const ClassStats& stats, double epsilon);
StatsFile stats_from_json(std::string_view text);
void write_stats(const std::filesystem::path& path, const ClassStats& stats, double epsilon);
StatsFile read_stats(const std::filesystem::path& path);

}  // namespace normscale
