#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "normscale/error.hpp"
#include "normscale/stats.hpp"
#include "oracles.hpp"

using namespace normscale;

namespace {

LogitSet make_records(const std::vector<std::vector<double>>& rows) {
    LogitSet out;
    for (const auto& r : rows) out.push_back({r, std::nullopt, Origin::train});
    return out;
}

ClassStats one_class(double mu, double sigma) {
    return {1, {mu}, {sigma}, 1};
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::io;
}

}  // namespace

TEST_CASE("fit_class_stats uses population std over every record") {
    const auto stats = fit_class_stats(make_records({{1, 0}, {3, 0}, {5, 0}}));
    CHECK(stats.num_classes == 2);
    CHECK(stats.sample_count == 3);
    CHECK(stats.mu[0] == doctest::Approx(3.0).epsilon(1e-15));
    // sqrt(((1-3)^2 + 0 + (5-3)^2) / 3)
    CHECK(stats.sigma[0] == doctest::Approx(1.6329931618554521).epsilon(1e-15));
    CHECK(stats.sigma[1] == 0.0);
}

TEST_CASE("fit_class_stats degenerate inputs") {
    SUBCASE("identical records give zero sigma") {
        const auto s = fit_class_stats(make_records({{2, 7, -1}, {2, 7, -1}, {2, 7, -1}}));
        CHECK(std::all_of(s.sigma.begin(), s.sigma.end(), [](double v) { return v == 0.0; }));
    }
    SUBCASE("single record") {
        const auto s = fit_class_stats(make_records({{2, -1}}));
        CHECK(s.mu == std::vector<double>{2, -1});
        CHECK(s.sigma == std::vector<double>{0, 0});
    }
    SUBCASE("empty input is a fit error") {
        CHECK(kind_of([] { fit_class_stats(LogitSet{}); }) == ErrorKind::fit);
    }
    SUBCASE("ragged widths are a shape error") {
        CHECK(kind_of([] { fit_class_stats(make_records({{1, 2}, {1}})); }) == ErrorKind::shape);
    }
}

TEST_CASE("fit_class_stats is order independent") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(3.0, 7.0);
    LogitSet recs(257);
    for (auto& r : recs) r.logits = {nd(rng), nd(rng) * 1e3, nd(rng) * 1e-3};
    const auto a = fit_class_stats(recs);
    std::shuffle(recs.begin(), recs.end(), rng);
    const auto b = fit_class_stats(recs);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma == b.sigma);
}

TEST_CASE("norm_scale examples") {
    const ClassStats s{2, {1.5, -2.0}, {0.5, 3.0}, 10};
    CHECK(norm_scale(std::vector<double>{1.5, -2.0}, s) == std::vector<double>{0.0, 0.0});
    CHECK(norm_scale(std::vector<double>{2.0, 1.0}, s) == std::vector<double>{1.0, 1.0});
    CHECK(norm_scale(std::vector<double>{7.0}, one_class(3, 2)) == std::vector<double>{2.0});
    CHECK(kind_of([&] { norm_scale(std::vector<double>{1.0}, s); }) == ErrorKind::shape);
}

TEST_CASE("zero sigma is floored at epsilon") {
    const auto s = one_class(4.0, 0.0);
    CHECK(norm_scale(std::vector<double>{4.0}, s)[0] == 0.0);
    CHECK(norm_scale(std::vector<double>{4.5}, s, 0.25)[0] == doctest::Approx(2.0));
}

TEST_CASE("tau_norm_scale") {
    const auto s = one_class(3, 2);
    CHECK(tau_norm_scale(std::vector<double>{7.0}, s, 2.0) == std::vector<double>{1.0});
    CHECK(tau_norm_scale(std::vector<double>{3.0}, s, 17.0) == std::vector<double>{0.0});
    CHECK(kind_of([&] { tau_norm_scale(std::vector<double>{7.0}, s, 0.0); }) == ErrorKind::parameter);
    CHECK(kind_of([&] { tau_norm_scale(std::vector<double>{7.0}, s, -1.0); }) == ErrorKind::parameter);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 10.0);
    std::uniform_real_distribution<double> taus(0.01, 100.0);
    const ClassStats st{4, {1, -2, 0.5, 9}, {0.3, 2, 0, 11}, 5};
    for (int i = 0; i < 200; ++i) {
        std::vector<double> z{nd(rng), nd(rng), nd(rng), nd(rng)};
        const double tau = taus(rng);
        const auto base = norm_scale(z, st);
        const auto scaled = tau_norm_scale(z, st, tau);
        for (std::size_t j = 0; j < z.size(); ++j) CHECK(scaled[j] == base[j] / tau);
        CHECK(tau_norm_scale(z, st, 1.0) == base);
    }
}

TEST_CASE("temperature_scale") {
    CHECK(temperature_scale(std::vector<double>{2, 4}, 2.0) == std::vector<double>{1, 2});
    CHECK(temperature_scale(std::vector<double>{2, -4.5}, 1.0) == std::vector<double>{2, -4.5});
    for (double tau : {0.1, 1.0, 100.0}) {
        const auto z = temperature_scale(std::vector<double>{3, -1, 5}, tau);
        CHECK(std::max_element(z.begin(), z.end()) - z.begin() == 2);
    }
    CHECK(kind_of([] { temperature_scale(std::vector<double>{1}, 0.0); }) == ErrorKind::parameter);
}

TEST_CASE("post-normalization training columns are standardized") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    LogitSet recs(1000);
    for (auto& r : recs) r.logits = {5 + 3 * nd(rng), -40 + 0.01 * nd(rng), 7.0};
    const auto s = fit_class_stats(recs);
    for (std::size_t j = 0; j < 3; ++j) {
        double sum = 0, sq = 0;
        for (const auto& r : recs) sum += norm_scale(r.logits, s)[j];
        const double mean = sum / recs.size();
        for (const auto& r : recs) {
            const double d = norm_scale(r.logits, s)[j] - mean;
            sq += d * d;
        }
        CHECK(std::abs(mean) <= 1e-9);
        if (s.sigma[j] > kDefaultEpsilon) CHECK(std::abs(std::sqrt(sq / recs.size()) - 1.0) <= 1e-9);
        else CHECK(sq == 0.0);
    }
}

TEST_CASE("stream_init") {
    const auto st = stream_init(one_class(3, 2), StreamMode::literal);
    CHECK(st.t == 0);
    CHECK(st.mu_t == std::vector<double>{3});
    CHECK(st.var_t == std::vector<double>{4});

    const auto zero = stream_init(ClassStats{2, {1, 1}, {0, 0}, 3}, StreamMode::standard);
    CHECK(zero.var_t == std::vector<double>{0, 0});

    const auto a = stream_init(one_class(3, 2), StreamMode::literal);
    const auto b = stream_init(one_class(3, 2), StreamMode::standard);
    CHECK(a.mu_t == b.mu_t);
    CHECK(a.var_t == b.var_t);
}

TEST_CASE("stream_update literal recurrence") {
    auto st = stream_init(one_class(2, 1), StreamMode::literal);
    st = stream_update(st, std::vector<double>{4});
    CHECK(st.t == 1);
    CHECK(st.mu_t[0] == 3.0);  // (2 + 4) / 2
    st = stream_update(st, std::vector<double>{3});
    CHECK(st.t == 2);
    CHECK(st.mu_t[0] == 2.0);  // (3 + 3) / 3
    CHECK(kind_of([&] { stream_update(st, std::vector<double>{1, 2}); }) == ErrorKind::shape);
}

TEST_CASE("stream_update standard mode is a running average with one pseudo-sample") {
    auto st = stream_init(one_class(2, 1), StreamMode::standard);
    st = stream_update(st, std::vector<double>{4});
    st = stream_update(st, std::vector<double>{3});
    CHECK(st.mu_t[0] == doctest::Approx(3.0).epsilon(1e-15));  // (2 + 4 + 3) / 3
}

TEST_CASE("stream with zero updates scales like frozen statistics") {
    const ClassStats s{3, {1, 2, 3}, {0.5, 0, 4}, 8};
    for (auto mode : {StreamMode::literal, StreamMode::standard}) {
        const auto st = stream_init(s, mode);
        const std::vector<double> z{0.3, 9.0, -2.0};
        CHECK(stream_scale(z, st) == norm_scale(z, s));
        CHECK(stream_scale(z, st, 2.5) == tau_norm_scale(z, s, 2.5));
    }
}

TEST_CASE("literal stream matches the symbol-for-symbol oracle; variance stays non-negative") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd(0.0, 5.0);
    const ClassStats s{3, {1, -1, 4}, {2, 0.5, 0}, 100};
    auto st = stream_init(s, StreamMode::literal);
    auto std_st = stream_init(s, StreamMode::standard);
    oracle::LiteralStream ref{s.mu, {4, 0.25, 0}};
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> z{nd(rng), nd(rng) + 3, nd(rng) * 0.01};
        stream_update_inplace(st, z);
        stream_update_inplace(std_st, z);
        ref.step(z);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(st.mu_t[j] - ref.mu[j]) <= 1e-12);
            CHECK(std::abs(st.var_t[j] - ref.var[j]) <= 1e-12);
            CHECK(st.var_t[j] >= 0.0);
            CHECK(std_st.var_t[j] >= 0.0);
        }
    }
}

TEST_CASE("stats JSON round trip keeps full precision") {
    ClassStats s{3, {0.1, -1.0 / 3.0, 1e-300}, {std::sqrt(2.0), 0.0, 12345.678901234567}, 42};
    const auto back = stats_from_json(stats_to_json(s, 1e-9));
    CHECK(back.stats.mu == s.mu);
    CHECK(back.stats.sigma == s.sigma);
    CHECK(back.stats.sample_count == 42);
    CHECK(back.epsilon == 1e-9);
    CHECK(kind_of([] { stats_from_json("{\"num_classes\":2,\"mu\":[1],\"sigma\":[1,1],\"sample_count\":1}"); }) ==
          ErrorKind::shape);
    CHECK(kind_of([] { stats_from_json("not json"); }) == ErrorKind::parse);
}
