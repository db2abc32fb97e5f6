#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "xling/correlation.hpp"

using namespace xling;

namespace {

// definitional oracle: covariance over product of standard deviations
double pearson_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
    mx /= n;
    my /= n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cov += (xs[i] - mx) * (ys[i] - my);
        vx += (xs[i] - mx) * (xs[i] - mx);
        vy += (ys[i] - my) * (ys[i] - my);
    }
    return (cov / n) / (std::sqrt(vx / n) * std::sqrt(vy / n));
}

DistanceMatrix toy_matrix() {
    std::vector<LanguageId> langs{{"aaa"}, {"bbb"}, {"ccc"}, {"ddd"}};
    std::vector<double> values{
        0.0, 0.1, 0.5, 0.9,
        0.1, 0.0, 0.4, 0.8,
        0.5, 0.4, 0.0, 0.3,
        0.9, 0.8, 0.3, 0.0};
    return DistanceMatrix(MetricId::AnderSyntax, langs, values, true);
}

TransferScoreMatrix scores_from_distance(const DistanceMatrix& D, const std::string& task,
                                         ModelScale scale) {
    std::vector<double> f1;
    for (std::size_t i = 0; i < D.size(); ++i)
        for (std::size_t j = 0; j < D.size(); ++j)
            f1.push_back(100.0 * (1.0 - D.at(i, j)));
    return TransferScoreMatrix(task, scale, D.languages(), D.languages(), std::move(f1));
}

}  // namespace

TEST_CASE("pearson basics") {
    std::vector<double> a{1, 2, 3}, b{2, 4, 6}, c{3, 2, 1};
    CHECK(pearson(a, b) == doctest::Approx(1.0));
    CHECK(pearson(a, c) == doctest::Approx(-1.0));

    std::vector<double> x{1, 2, 4}, y{1, 3, 5};
    CHECK(pearson(x, y) == doctest::Approx(pearson_oracle(x, y)).epsilon(1e-12));

    std::vector<double> one{1.0}, flat{2, 2, 2};
    CHECK_THROWS_AS(pearson(one, one), ComputeError);
    CHECK_THROWS_AS(pearson(a, flat), ComputeError);
}

TEST_CASE("affine-constructed scores give rho* = 1 everywhere") {
    auto D = toy_matrix();
    auto S = scores_from_distance(D, "toy", ModelScale::Base);
    auto report = distance_transfer_correlation(D, S, true);
    CHECK(report.per_source.size() == 4);
    for (const auto& [lang, rho] : report.per_source)
        CHECK(rho == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("per-source values match the definitional oracle") {
    auto D = toy_matrix();
    // hand-built scores, one NA
    std::vector<double> f1{
        90, 80, 55, 20,
        85, 95, 60, 30,
        50, 58, 97, std::nan(""),
        25, 35, 70, 92};
    TransferScoreMatrix S("toy", ModelScale::Small, D.languages(), D.languages(), f1);
    auto report = distance_transfer_correlation(D, S, false);

    // source aaa over all four targets
    std::vector<double> dists{0.0, 0.1, 0.5, 0.9}, scores{90, 80, 55, 20};
    CHECK(report.per_source.at(LanguageId{"aaa"}) ==
          doctest::Approx(-pearson_oracle(dists, scores)).epsilon(1e-12));
    // source ccc drops the NA target, leaving exactly 3 points
    std::vector<double> dists_c{0.5, 0.4, 0.0}, scores_c{50, 58, 97};
    CHECK(report.per_source.at(LanguageId{"ccc"}) ==
          doctest::Approx(-pearson_oracle(dists_c, scores_c)).epsilon(1e-12));

    double sum = 0;
    for (const auto& [lang, rho] : report.per_source) sum += rho;
    CHECK(report.mean ==
          doctest::Approx(sum / static_cast<double>(report.per_source.size())));
}

TEST_CASE("insufficient shared targets errors") {
    std::vector<LanguageId> langs{{"aaa"}, {"bbb"}, {"ccc"}};
    DistanceMatrix D(MetricId::InnerSyntax, langs,
                     {0, 0.5, 1.0, 0.5, 0, 0.2, 1.0, 0.2, 0}, true);
    std::vector<double> f1{90, 80, 70, 60, 50, 40, 30, 20, 10};
    TransferScoreMatrix S("toy", ModelScale::Base, langs, langs, f1);
    // exclude_self leaves only 2 targets per source
    CHECK_THROWS_AS(distance_transfer_correlation(D, S, true), ComputeError);
    CHECK_NOTHROW(distance_transfer_correlation(D, S, false));
}

TEST_CASE("exclude_self equals NA diagonal") {
    auto D = toy_matrix();
    auto S = scores_from_distance(D, "toy", ModelScale::Base);
    std::vector<double> f1_na;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            f1_na.push_back(i == j ? std::nan("") : S.at(i, j));
    TransferScoreMatrix S_na("toy", ModelScale::Base, D.languages(), D.languages(), f1_na);
    auto a = distance_transfer_correlation(D, S, true);
    auto b = distance_transfer_correlation(D, S_na, false);
    for (const auto& [lang, rho] : a.per_source)
        CHECK(rho == b.per_source.at(lang));
}

TEST_CASE("rho* affine invariance and sign flip") {
    auto D = toy_matrix();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> scale_dist(0.1, 3.0), shift_dist(-10.0, 10.0);
    std::vector<double> base_f1{
        90, 80, 55, 20,
        85, 95, 60, 30,
        50, 58, 97, 40,
        25, 35, 70, 92};
    TransferScoreMatrix S("toy", ModelScale::Base, D.languages(), D.languages(), base_f1);
    auto ref = distance_transfer_correlation(D, S, true);
    for (int trial = 0; trial < 10; ++trial) {
        const double a = scale_dist(rng), b = shift_dist(rng);
        // positive affine transform of distances
        std::vector<double> values;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                values.push_back(a * D.at(i, j) + std::abs(b));
        DistanceMatrix D2(D.metric(), D.languages(), values, true);
        auto got = distance_transfer_correlation(D2, S, true);
        for (const auto& [lang, rho] : ref.per_source)
            CHECK(got.per_source.at(lang) == doctest::Approx(rho).epsilon(1e-12));

        // negating distances flips every sign
        std::vector<double> neg;
        for (double v : values) neg.push_back(-v);
        DistanceMatrix D3(D.metric(), D.languages(), neg, true);
        auto flipped = distance_transfer_correlation(D3, S, true);
        for (const auto& [lang, rho] : got.per_source)
            CHECK(flipped.per_source.at(lang) == doctest::Approx(-rho).epsilon(1e-12));
    }
}

TEST_CASE("correlation sweep cardinality and isolation") {
    auto syntax = parse_feature_table(
        "lang,f1,f2,f3,f4\naaa,1,0,1,0\nbbb,0,0,1,1\nccc,1,1,0,0\nddd,0,1,0,1\n",
        FeatureClass::Syntax);
    // phonology has a language with all-missing cells -> incomparable pairs
    auto phonology = parse_feature_table(
        "lang,f1,f2\naaa,?,?\nbbb,1,0\nccc,0,0\nddd,1,1\n", FeatureClass::Phonology);
    std::map<FeatureClass, FeatureTable> tables;
    tables.emplace(FeatureClass::Syntax, syntax);
    tables.emplace(FeatureClass::Phonology, phonology);

    std::vector<LanguageId> langs{{"aaa"}, {"bbb"}, {"ccc"}, {"ddd"}};
    std::vector<double> f1{
        90, 80, 55, 20,
        85, 95, 60, 30,
        50, 58, 97, 40,
        25, 35, 70, 92};
    std::vector<TransferScoreMatrix> scores;
    scores.emplace_back("toy", ModelScale::Base, langs, langs, f1);

    auto entries = correlation_sweep(tables, scores, true);
    CHECK(entries.size() == 14);  // one per base metric x 1 setting
    std::size_t ok = 0, failed = 0;
    for (const auto& e : entries) {
        if (e.report) ++ok;
        else ++failed;
        if (metric_feature_class(e.metric) == FeatureClass::Syntax) {
            CHECK(e.report.has_value());
            // sweep result equals the direct per-metric call
            auto direct = distance_transfer_correlation(
                build_distance_matrix(syntax, e.metric, true), scores[0], true);
            CHECK(e.report->mean == direct.mean);
        }
        if (metric_feature_class(e.metric) == FeatureClass::Phonology)
            CHECK_FALSE(e.report.has_value());  // isolated failure
    }
    CHECK(ok == 4);
    CHECK(failed == 10);  // phonology (4) + missing tables (6)
}

TEST_CASE("transfer score csv round trip") {
    std::vector<LanguageId> langs{{"aaa"}, {"bbb"}, {"ccc"}};
    std::vector<double> f1{90, 80, std::nan(""), 85, 95, 60, 50, 58, 97};
    TransferScoreMatrix S("minion", ModelScale::Large, langs, langs, f1);
    auto parsed = parse_transfer_scores(transfer_scores_to_csv(S));
    CHECK(parsed.task() == "minion");
    CHECK(parsed.scale() == ModelScale::Large);
    CHECK(std::isnan(parsed.at(0, 2)));
    CHECK(parsed.at(2, 2) == 97.0);
}
