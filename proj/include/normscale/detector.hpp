#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normscale/records.hpp"
#include "normscale/stats.hpp"

namespace normscale {

enum class ScoreKind { msp, energy };
enum class Scaling { none, norm, tau_norm, temp };
enum class StatsMode { frozen, running_literal, running_standard };
enum class PredictionSource { unscaled_logits, scaled_logits };

std::string_view to_string(ScoreKind v) noexcept;
std::string_view to_string(Scaling v) noexcept;
std::string_view to_string(StatsMode v) noexcept;
std::string_view to_string(PredictionSource v) noexcept;

// Parsers accept the CLI spellings (tau-norm, running-literal, unscaled, ...).
ScoreKind score_kind_from_string(std::string_view s);
Scaling scaling_from_string(std::string_view s);
StatsMode stats_mode_from_string(std::string_view s);
PredictionSource prediction_source_from_string(std::string_view s);

struct DetectorConfig {
    ScoreKind score_kind = ScoreKind::msp;
    Scaling scaling = Scaling::none;
    double tau = 1.0;
    StatsMode stats_mode = StatsMode::frozen;
    PredictionSource prediction_source = PredictionSource::unscaled_logits;
    double epsilon = kDefaultEpsilon;

    // Throws a parameter error when the combination is not meaningful.
    void validate() const;
    std::string variant_name() const;
};

// Higher score means more in-distribution for every score kind.
struct ScoredSample {
    ClassIndex predicted_class = 0;
    double score = 0.0;
    ScoreKind score_kind = ScoreKind::msp;
    Origin origin = Origin::in_test;
    // Max softmax of the scaled logits, used for reliability and ECE even
    // when the score itself is an energy.
    double confidence = 0.0;
    std::optional<ClassIndex> label;
};

std::vector<double> softmax(std::span<const double> logits);

// Lowest index wins ties.
ClassIndex argmax(std::span<const double> logits);

struct MspResult {
    ClassIndex predicted_class;
    double score;
};
MspResult msp_score(std::span<const double> logits);

// tau * log(sum_j exp(z_j / tau)), computed with max subtraction.
double energy_score(std::span<const double> logits, double tau = 1.0);

enum class Decision { in_distribution, out_of_distribution };
constexpr Decision decide(double score, double threshold) noexcept {
    return score < threshold ? Decision::out_of_distribution : Decision::in_distribution;
}

// Scores an already-ordered test stream. With running statistics each
// record is folded into the statistics before it is scaled.
std::vector<ScoredSample> score_stream(std::span<const LogitRecord> records,
                                       const ClassStats& stats, const DetectorConfig& config);

// CSV with header origin,predicted_class,score; scores at 9 significant digits.
std::string scored_to_csv(std::span<const ScoredSample> scored);
void write_scored_csv(const std::filesystem::path& path, std::span<const ScoredSample> scored);

}  // namespace normscale
