#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "xling/selection.hpp"

using namespace xling;

namespace {

std::vector<LanguageId> make_langs(std::size_t n) {
    std::vector<LanguageId> langs;
    for (std::size_t i = 0; i < n; ++i) {
        std::string code = "l";
        code += static_cast<char>('a' + i / 26);
        code += static_cast<char>('a' + i % 26);
        langs.push_back(LanguageId{code});
    }
    return langs;
}

// two tight blocks: within 0.1, across 0.9
DistanceMatrix two_block_matrix() {
    auto langs = make_langs(6);
    const std::size_t n = 6;
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            values[i * n + j] = (i / 3 == j / 3) ? 0.1 : 0.9;
        }
    return DistanceMatrix(MetricId::Combined, langs, values, true);
}

DistanceMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
    auto langs = make_langs(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = unit(rng);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    return DistanceMatrix(MetricId::Combined, langs, values, true);
}

}  // namespace

TEST_CASE("pam saturation: k = n gives zero cost") {
    auto D = random_symmetric(5, 1);
    auto c = pam(D, 5);
    CHECK(c.cost == 0.0);
    CHECK(c.medoids.size() == 5);
    for (const auto& [lang, cluster] : c.assignment)
        CHECK(c.medoids[cluster] == lang);
}

TEST_CASE("pam on two-block matrix") {
    auto D = two_block_matrix();
    auto c = pam(D, 2);
    CHECK(c.k == 2);
    CHECK(c.cost == doctest::Approx(0.4));
    // one medoid per block
    std::set<std::size_t> blocks;
    for (const auto& m : c.medoids) blocks.insert(D.index_of(m) / 3);
    CHECK(blocks.size() == 2);
    // members cluster with their block's medoid
    for (const auto& [lang, cluster] : c.assignment)
        CHECK(D.index_of(lang) / 3 == D.index_of(c.medoids[cluster]) / 3);
    // matches the exhaustive oracle
    auto brute = brute_force_medoids(D, 2);
    CHECK(c.cost == brute.cost);
}

TEST_CASE("pam equals brute force on seeded random instances") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t n = 5 + seed % 4;  // 5..8
        const std::size_t k = 1 + seed % 3;  // 1..3
        auto D = random_symmetric(n, 100 + seed);
        auto fast = pam(D, k, seed);
        auto brute = brute_force_medoids(D, k);
        CHECK(fast.cost == doctest::Approx(brute.cost).epsilon(1e-12));
    }
}

TEST_CASE("pam swap phase never increases cost") {
    // cost of the final clustering is <= cost of greedy BUILD alone,
    // checked indirectly: final cost <= cost of any single-medoid-set choice
    auto D = random_symmetric(8, 77);
    auto c = pam(D, 3);
    auto brute = brute_force_medoids(D, 3);
    CHECK(c.cost >= brute.cost - 1e-12);
}

TEST_CASE("asymmetric input is symmetrized with a warning") {
    auto langs = make_langs(3);
    std::vector<double> values{0, 0.2, 0.4, 0.6, 0, 0.8, 0.4, 0.8, 0};
    DistanceMatrix D(MetricId::Combined, langs, values, true);
    bool warned = false;
    auto c = pam(D, 1, 0, &warned);
    CHECK(warned);
    // averaged (0.2+0.6)/2 = 0.4 for the first pair
    auto sym = pam(DistanceMatrix(MetricId::Combined, langs,
                                  {0, 0.4, 0.4, 0.4, 0, 0.8, 0.4, 0.8, 0}, true),
                   1);
    CHECK(c.cost == sym.cost);
    CHECK(c.medoids == sym.medoids);
}

TEST_CASE("brute force basics") {
    auto D = random_symmetric(5, 3);
    auto all = brute_force_medoids(D, 5);
    CHECK(all.cost == 0.0);
    CHECK_THROWS_AS(brute_force_medoids(random_symmetric(4, 1), 5), ValidationError);
}

TEST_CASE("select_k") {
    // 3 languages, min_size 3 -> forced k=1
    auto small = random_symmetric(3, 9);
    auto [k1, c1] = select_k(small, 3);
    CHECK(k1 == 1);

    // two-block 6-point instance -> k=2 with sizes 3/3
    auto [k2, c2] = select_k(two_block_matrix(), 3);
    CHECK(k2 == 2);
    auto members = c2.members();
    CHECK(members[0].size() == 3);
    CHECK(members[1].size() == 3);

    // min_size 1 gives the floor-capped maximum k = n
    auto [k3, c3] = select_k(small, 1);
    CHECK(k3 == 3);
}

TEST_CASE("relation graph structure") {
    // single cluster of 3: star with 2 edges, diameter 2
    auto D3 = random_symmetric(3, 5);
    auto g1 = build_relation_graph(pam(D3, 1));
    CHECK(g1.edge_count() == 2);
    CHECK(graph_diameter(g1) == 2);

    // 2 clusters of 4+4: 3+3 star edges + 1 medoid edge, diameter 3
    auto langs = make_langs(8);
    const std::size_t n = 8;
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) values[i * n + j] = (i / 4 == j / 4) ? 0.1 : 0.9;
    DistanceMatrix D8(MetricId::Combined, langs, values, true);
    auto g2 = build_relation_graph(pam(D8, 2));
    CHECK(g2.edge_count() == 7);
    CHECK(graph_diameter(g2) == 3);

    // 3 clusters -> 3 medoid-clique edges
    auto D9 = random_symmetric(9, 11);
    auto c9 = pam(D9, 3);
    auto g3 = build_relation_graph(c9);
    std::size_t medoid_edges = 0;
    for (std::size_t a = 0; a < c9.medoids.size(); ++a)
        for (std::size_t b = a + 1; b < c9.medoids.size(); ++b) {
            std::size_t ia = 0, ib = 0;
            for (std::size_t i = 0; i < g3.nodes.size(); ++i) {
                if (g3.nodes[i] == c9.medoids[a]) ia = i;
                if (g3.nodes[i] == c9.medoids[b]) ib = i;
            }
            if (g3.edge(ia, ib)) ++medoid_edges;
        }
    CHECK(medoid_edges == 3);
}

TEST_CASE("diameter of two singleton clusters is 1") {
    auto D = random_symmetric(2, 1);
    auto g = build_relation_graph(pam(D, 2));
    CHECK(graph_diameter(g) == 1);
}

TEST_CASE("every seeded clustering yields connected graph with diameter <= 3") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 4 + seed % 10;
        const std::size_t k = 1 + seed % std::min<std::size_t>(4, n);
        auto D = random_symmetric(n, 500 + seed);
        auto g = build_relation_graph(pam(D, k, seed));
        CHECK(graph_diameter(g) <= 3);
    }
}

TEST_CASE("enumerate_configurations") {
    auto D = two_block_matrix();
    auto c = pam(D, 2);
    auto configs = enumerate_configurations(c, 2, 5, 42);
    REQUIRE(configs.size() == 1 + 2 + 5);

    CHECK(configs[0].kind == ConfigKind::InterCluster);
    CHECK(configs[0].sources.size() == 2);  // |D_s| = number of medoids
    CHECK(configs[0].targets.size() == 6);
    std::set<LanguageId> medoid_set(c.medoids.begin(), c.medoids.end());
    CHECK(configs[0].sources == medoid_set);

    const auto members = c.members();
    for (std::size_t ci = 0; ci < 2; ++ci) {
        const auto& intra = configs[1 + ci];
        CHECK(intra.kind == ConfigKind::IntraCluster);
        CHECK(intra.sources.size() == 2);
        std::set<LanguageId> cluster(members[ci].begin(), members[ci].end());
        CHECK(intra.targets == cluster);
        for (const auto& lang : intra.sources) CHECK(cluster.count(lang) == 1);
    }

    std::set<std::set<LanguageId>> seen;
    for (const auto& cfg : configs) CHECK(seen.insert(cfg.sources).second);

    // determinism
    auto again = enumerate_configurations(c, 2, 5, 42);
    for (std::size_t i = 0; i < configs.size(); ++i) {
        CHECK(configs[i].sources == again[i].sources);
        CHECK(configs[i].kind == again[i].kind);
    }
}

TEST_CASE("random configurations avoid medoid set and single clusters") {
    auto D = two_block_matrix();
    auto c = pam(D, 2);
    std::set<LanguageId> medoid_set(c.medoids.begin(), c.medoids.end());
    std::size_t drawn = 0;
    for (std::uint64_t seed = 0; drawn < 1000; ++seed) {
        auto configs = enumerate_configurations(c, 2, 4, seed);
        for (const auto& cfg : configs) {
            if (cfg.kind != ConfigKind::Random) continue;
            ++drawn;
            CHECK(cfg.sources != medoid_set);
            std::set<std::size_t> clusters;
            for (const auto& lang : cfg.sources) clusters.insert(c.assignment.at(lang));
            CHECK(clusters.size() > 1);
        }
    }
}

TEST_CASE("configuration preconditions") {
    auto D = two_block_matrix();
    auto c = pam(D, 2);
    CHECK_THROWS_AS(enumerate_configurations(c, 4, 1, 0), ValidationError);
}

TEST_CASE("delta report arithmetic") {
    std::vector<ScoredRun> runs{
        {"random", ConfigKind::Random, ModelScale::Base, 60.0},
        {"random", ConfigKind::Random, ModelScale::Base, 62.0},
        {"medoids*", ConfigKind::InterCluster, ModelScale::Base, 63.0},
    };
    auto report = delta_report("toy", runs);
    CHECK(report.deltas.at("medoids*").at(ModelScale::Base) == doctest::Approx(2.0));

    // configuration equal to baseline: zero deltas
    std::vector<ScoredRun> equal_runs{
        {"random", ConfigKind::Random, ModelScale::Small, 50.0},
        {"tur*", ConfigKind::IntraCluster, ModelScale::Small, 50.0},
    };
    auto zero = delta_report("toy", equal_runs);
    CHECK(zero.deltas.at("tur*").at(ModelScale::Small) == 0.0);

    // missing baseline
    std::vector<ScoredRun> no_base{
        {"medoids*", ConfigKind::InterCluster, ModelScale::Base, 63.0}};
    CHECK_THROWS_AS(delta_report("toy", no_base), ValidationError);
}

TEST_CASE("clustering json round trip") {
    auto D = two_block_matrix();
    auto c = pam(D, 2);
    auto parsed = clustering_from_json(clustering_to_json(c));
    CHECK(parsed.k == c.k);
    CHECK(parsed.medoids == c.medoids);
    CHECK(parsed.assignment == c.assignment);
}

TEST_CASE("graph serialization formats") {
    auto D = two_block_matrix();
    auto g = build_relation_graph(pam(D, 2));
    auto json = graph_to_json(g);
    CHECK(json.find("medoid") != std::string::npos);
    auto dot = graph_to_dot(g);
    CHECK(dot.find("graph languages {") == 0);
    CHECK(dot.find("--") != std::string::npos);
}
