#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "normscale/detector.hpp"
#include "normscale/error.hpp"

using namespace normscale;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::io;
}

std::vector<double> random_logits(std::mt19937_64& rng, std::size_t n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> z(n);
    for (auto& v : z) v = u(rng);
    return z;
}

LogitSet random_stream(std::mt19937_64& rng, std::size_t n) {
    LogitSet out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].logits = random_logits(rng, 4, 8.0);
        out[i].origin = i % 3 == 0 ? Origin::ood_test : Origin::in_test;
        if (out[i].origin == Origin::in_test) out[i].label = i % 4;
    }
    return out;
}

}  // namespace

TEST_CASE("softmax examples") {
    CHECK(softmax(std::vector<double>{0, 0}) == std::vector<double>{0.5, 0.5});
    for (double c : {-1e4, -3.0, 0.0, 7.5, 1e4}) {
        const auto p = softmax(std::vector<double>{c, c, c, c});
        for (double v : p) CHECK(v == 0.25);
    }
    const auto p = softmax(std::vector<double>{std::log(1.0), std::log(2.0), std::log(3.0)});
    CHECK(p[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(2.0 / 6).epsilon(1e-14));
    CHECK(p[2] == doctest::Approx(3.0 / 6).epsilon(1e-14));
    CHECK(kind_of([] { softmax(std::vector<double>{0, NAN}); }) == ErrorKind::domain);
    CHECK(kind_of([] { softmax(std::vector<double>{INFINITY}); }) == ErrorKind::domain);
}

TEST_CASE("softmax sums to one and is shift invariant") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> shift(-100, 100);
    for (int i = 0; i < 500; ++i) {
        const auto z = random_logits(rng, 1 + i % 9, 50.0);
        const auto p = softmax(z);
        double sum = 0;
        for (double v : p) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        auto zs = z;
        const double c = shift(rng);
        for (double& v : zs) v += c;
        const auto q = softmax(zs);
        for (std::size_t j = 0; j < p.size(); ++j) CHECK(std::abs(p[j] - q[j]) <= 1e-12);
    }
}

TEST_CASE("msp_score examples") {
    const auto tie = msp_score(std::vector<double>{0, 0});
    CHECK(tie.predicted_class == 0);
    CHECK(tie.score == 0.5);
    const auto r = msp_score(std::vector<double>{10, 0});
    CHECK(r.predicted_class == 0);
    CHECK(r.score == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-15));
    CHECK(r.score == doctest::Approx(0.9999546021312976).epsilon(1e-15));
    const auto sat = msp_score(std::vector<double>{50, 0, 0});
    CHECK(sat.predicted_class == 0);
    CHECK(sat.score == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(msp_score(std::vector<double>{1, 3, 3}).predicted_class == 1);
}

TEST_CASE("msp lies in (1/N, 1] with equality exactly on full ties") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 2 + i % 7;
        const auto z = random_logits(rng, n, 20.0);
        const double s = msp_score(z).score;
        CHECK(s > 1.0 / n);
        CHECK(s <= 1.0);
        const std::vector<double> flat(n, z[0]);
        CHECK(msp_score(flat).score == 1.0 / static_cast<double>(n));
    }
}

TEST_CASE("temperature keeps the predicted class and drives msp toward 1/N") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto z = random_logits(rng, 5, 10.0);
        const auto base = msp_score(z);
        double prev = 2.0;
        for (double tau : {1.0, 10.0, 1000.0}) {
            const auto r = msp_score(temperature_scale(z, tau));
            CHECK(r.predicted_class == base.predicted_class);
            CHECK(r.score < prev);
            prev = r.score;
        }
        CHECK(prev > 0.2);
    }
}

TEST_CASE("energy_score") {
    CHECK(energy_score(std::vector<double>{0, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(energy_score(std::vector<double>{-3.25}) == -3.25);
    CHECK(std::isfinite(energy_score(std::vector<double>{1e4, -1e4, 1e4})));
    CHECK(kind_of([] { energy_score(std::vector<double>{1}, 0.0); }) == ErrorKind::parameter);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> shift(-100, 100);
    for (int i = 0; i < 1000; ++i) {
        const auto z = random_logits(rng, 1 + i % 10, 100.0);
        const double c = shift(rng);
        auto zc = z;
        for (double& v : zc) v += c;
        CHECK(std::abs(energy_score(zc) - energy_score(z) - c) <= 1e-9);
    }
}

TEST_CASE("decide uses a strict less-than for OoD") {
    static_assert(decide(0.4, 0.5) == Decision::out_of_distribution);
    static_assert(decide(0.5, 0.5) == Decision::in_distribution);
    static_assert(decide(0.9, 0.5) == Decision::in_distribution);
}

TEST_CASE("DetectorConfig validation") {
    DetectorConfig c;
    c.scaling = Scaling::temp;
    c.tau = 0.0;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::parameter);
    c.scaling = Scaling::none;
    c.tau = 1.0;
    c.stats_mode = StatsMode::running_literal;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::parameter);
    c.scaling = Scaling::norm;
    CHECK_NOTHROW(c.validate());
    CHECK(scaling_from_string("tau-norm") == Scaling::tau_norm);
    CHECK(stats_mode_from_string("running-standard") == StatsMode::running_standard);
    CHECK(kind_of([] { score_kind_from_string("odin"); }) == ErrorKind::parameter);
}

TEST_CASE("score_stream without scaling is plain msp per record") {
    std::mt19937_64 rng(5);
    const auto recs = random_stream(rng, 50);
    const ClassStats unused{4, {0, 0, 0, 0}, {1, 1, 1, 1}, 1};
    const auto scored = score_stream(recs, unused, DetectorConfig{});
    REQUIRE(scored.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto m = msp_score(recs[i].logits);
        CHECK(scored[i].score == m.score);
        CHECK(scored[i].predicted_class == m.predicted_class);
        CHECK(scored[i].origin == recs[i].origin);
        CHECK(scored[i].label == recs[i].label);
    }
}

TEST_CASE("score_stream with frozen norm scaling scores z-scored logits") {
    std::mt19937_64 rng(6);
    const auto recs = random_stream(rng, 60);
    const auto stats = fit_class_stats(recs);
    DetectorConfig c;
    c.scaling = Scaling::norm;
    c.prediction_source = PredictionSource::scaled_logits;
    const auto scored = score_stream(recs, stats, c);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto m = msp_score(norm_scale(recs[i].logits, stats));
        CHECK(scored[i].score == m.score);
        CHECK(scored[i].predicted_class == m.predicted_class);
    }
    c.score_kind = ScoreKind::energy;
    const auto energy = score_stream(recs, stats, c);
    CHECK(energy[3].score == energy_score(norm_scale(recs[3].logits, stats)));
}

TEST_CASE("prediction source picks raw or scaled argmax") {
    // Column 1 has a large mean, so scaling flips the argmax.
    const ClassStats s{2, {0, 10}, {1, 1}, 5};
    const LogitSet recs{{{5, 8}, std::nullopt, Origin::in_test}};
    DetectorConfig c;
    c.scaling = Scaling::norm;
    CHECK(score_stream(recs, s, c)[0].predicted_class == 1);
    c.prediction_source = PredictionSource::scaled_logits;
    CHECK(score_stream(recs, s, c)[0].predicted_class == 0);
}

TEST_CASE("frozen scoring is permutation equivariant, running scoring is not") {
    std::mt19937_64 rng(7);
    const auto recs = random_stream(rng, 40);
    const auto stats = fit_class_stats(recs);
    auto permuted = recs;
    std::reverse(permuted.begin(), permuted.end());

    DetectorConfig frozen;
    frozen.scaling = Scaling::norm;
    const auto a = score_stream(recs, stats, frozen);
    const auto b = score_stream(permuted, stats, frozen);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(a[i].score == b[recs.size() - 1 - i].score);

    for (auto mode : {StatsMode::running_literal, StatsMode::running_standard}) {
        DetectorConfig running = frozen;
        running.stats_mode = mode;
        const auto c = score_stream(recs, stats, running);
        const auto d = score_stream(permuted, stats, running);
        bool any_diff = false;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            any_diff = any_diff || c[i].score != d[recs.size() - 1 - i].score;
        }
        CHECK(any_diff);
    }
}

TEST_CASE("running scoring folds the sample in before scaling it") {
    const ClassStats s{2, {0, 0}, {1, 1}, 10};
    const LogitSet recs{{{4, -2}, std::nullopt, Origin::in_test}};
    DetectorConfig c;
    c.scaling = Scaling::norm;
    c.stats_mode = StatsMode::running_literal;
    c.prediction_source = PredictionSource::scaled_logits;
    const auto st = stream_update(stream_init(s, StreamMode::literal), recs[0].logits);
    const auto expected = msp_score(stream_scale(recs[0].logits, st));
    CHECK(score_stream(recs, s, c)[0].score == expected.score);
}

TEST_CASE("score_stream is deterministic and rejects shape mismatches") {
    std::mt19937_64 rng(8);
    const auto recs = random_stream(rng, 30);
    const auto stats = fit_class_stats(recs);
    DetectorConfig c;
    c.scaling = Scaling::tau_norm;
    c.tau = 0.7;
    c.stats_mode = StatsMode::running_standard;
    const auto a = score_stream(recs, stats, c);
    const auto b = score_stream(recs, stats, c);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].score == b[i].score);

    const ClassStats narrow{3, {0, 0, 0}, {1, 1, 1}, 1};
    CHECK(kind_of([&] { score_stream(recs, narrow, c); }) == ErrorKind::shape);
}

TEST_CASE("scored CSV format") {
    std::vector<ScoredSample> s(2);
    s[0] = {1, 0.123456789012, ScoreKind::msp, Origin::in_test, 0.1, std::nullopt};
    s[1] = {0, 2.0 / 3.0, ScoreKind::msp, Origin::ood_test, 0.1, std::nullopt};
    CHECK(scored_to_csv(s) == "origin,predicted_class,score\nin_test,1,0.123456789\nood_test,0,0.666666667\n");
}
