#include "xling/selection.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include <json.hpp>

namespace xling {

std::vector<std::vector<LanguageId>> Clustering::members() const {
    std::vector<std::vector<LanguageId>> out(k);
    for (const auto& [lang, cluster] : assignment) out[cluster].push_back(lang);
    return out;
}

namespace {

// Distance used for membership: diagonal ignored, a point is at distance 0
// from itself as medoid.
double memb_dist(const DistanceMatrix& D, std::size_t i, std::size_t m) {
    return i == m ? 0.0 : D.at(i, m);
}

double set_cost(const DistanceMatrix& D, const std::vector<std::size_t>& medoids) {
    double cost = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m : medoids) best = std::min(best, memb_dist(D, i, m));
        cost += best;
    }
    return cost;
}

Clustering finalize(const DistanceMatrix& D, std::vector<std::size_t> medoid_idx) {
    std::sort(medoid_idx.begin(), medoid_idx.end());
    Clustering c;
    c.k = medoid_idx.size();
    for (std::size_t m : medoid_idx) c.medoids.push_back(D.languages()[m]);
    c.cost = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i) {
        std::size_t best_cluster = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t ci = 0; ci < medoid_idx.size(); ++ci) {
            const double d = memb_dist(D, i, medoid_idx[ci]);
            if (d < best) {
                best = d;
                best_cluster = ci;
            }
        }
        c.assignment[D.languages()[i]] = best_cluster;
        c.cost += best;
    }
    return c;
}

DistanceMatrix symmetrize_if_needed(const DistanceMatrix& D, bool* symmetrized) {
    bool sym = true;
    const std::size_t n = D.size();
    for (std::size_t i = 0; i < n && sym; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (D.at(i, j) != D.at(j, i)) { sym = false; break; }
    if (symmetrized) *symmetrized = !sym;
    if (sym) return D;
    std::vector<double> values(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            values[i * n + j] = 0.5 * (D.at(i, j) + D.at(j, i));
    return DistanceMatrix(D.metric(), D.languages(), std::move(values), D.normalized(),
                          D.degenerate());
}

double combination_count(std::size_t n, std::size_t k) {
    double combos = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    return combos;
}

// Lexicographic enumeration of all k-subsets; strict < keeps the first
// (lexicographically smallest) optimum.
std::vector<std::size_t> exhaustive_medoids(const DistanceMatrix& S, std::size_t k) {
    const std::size_t n = S.size();
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    std::vector<std::size_t> best_set;
    double best_cost = std::numeric_limits<double>::infinity();
    for (;;) {
        const double cost = set_cost(S, idx);
        if (cost < best_cost) {
            best_cost = cost;
            best_set = idx;
        }
        // advance to the next combination
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return best_set;
}

}  // namespace

Clustering pam(const DistanceMatrix& D, std::size_t k, std::uint64_t seed,
               bool* symmetrized) {
    (void)seed;  // the algorithm is deterministic; seed kept for interface stability
    const std::size_t n = D.size();
    if (k < 1 || k > n)
        throw ValidationError("pam: k must be in [1, " + std::to_string(n) + "]");
    DistanceMatrix S = symmetrize_if_needed(D, symmetrized);

    // Small instances (any registry-scale clustering) are solved exactly;
    // BUILD+SWAP below is the fallback for large ones.
    if (combination_count(n, k) <= 10000.0)
        return finalize(S, exhaustive_medoids(S, k));

    // BUILD: greedily add the medoid that lowers total cost the most.
    std::vector<std::size_t> medoids;
    std::vector<bool> chosen(n, false);
    while (medoids.size() < k) {
        std::size_t best_cand = n;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t cand = 0; cand < n; ++cand) {
            if (chosen[cand]) continue;
            medoids.push_back(cand);
            const double cost = set_cost(S, medoids);
            medoids.pop_back();
            if (cost < best_cost) {
                best_cost = cost;
                best_cand = cand;
            }
        }
        medoids.push_back(best_cand);
        chosen[best_cand] = true;
    }

    // SWAP: take the best strictly-improving (medoid, non-medoid) exchange
    // until none exists.
    double current = set_cost(S, medoids);
    for (;;) {
        double best_cost = current;
        std::size_t best_mi = n, best_cand = n;
        for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
            for (std::size_t cand = 0; cand < n; ++cand) {
                if (chosen[cand]) continue;
                const std::size_t old = medoids[mi];
                medoids[mi] = cand;
                const double cost = set_cost(S, medoids);
                medoids[mi] = old;
                if (cost < best_cost) {
                    best_cost = cost;
                    best_mi = mi;
                    best_cand = cand;
                }
            }
        }
        if (best_mi == n) break;
        chosen[medoids[best_mi]] = false;
        chosen[best_cand] = true;
        medoids[best_mi] = best_cand;
        current = best_cost;
    }
    return finalize(S, std::move(medoids));
}

Clustering brute_force_medoids(const DistanceMatrix& D, std::size_t k) {
    const std::size_t n = D.size();
    if (k < 1 || k > n)
        throw ValidationError("brute_force_medoids: k out of range");
    if (combination_count(n, k) > 1e6)
        throw ValidationError("brute_force_medoids: instance too large (C(n,k) > 1e6)");

    DistanceMatrix S = symmetrize_if_needed(D, nullptr);
    return finalize(S, exhaustive_medoids(S, k));
}

std::pair<std::size_t, Clustering> select_k(const DistanceMatrix& D,
                                            std::size_t min_size,
                                            std::uint64_t seed) {
    const std::size_t n = D.size();
    if (min_size < 1) throw ValidationError("select_k: min_size must be >= 1");
    if (n < min_size) throw ValidationError("select_k: fewer languages than min_size");
    for (std::size_t k = n / min_size; k >= 1; --k) {
        Clustering c = pam(D, k, seed);
        std::vector<std::size_t> sizes(k, 0);
        for (const auto& [lang, cluster] : c.assignment) ++sizes[cluster];
        if (std::all_of(sizes.begin(), sizes.end(),
                        [&](std::size_t s) { return s >= min_size; }))
            return {k, std::move(c)};
    }
    return {1, pam(D, 1, seed)};
}

std::size_t LanguageGraph::edge_count() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (edge(i, j)) ++count;
    return count;
}

LanguageGraph build_relation_graph(const Clustering& c) {
    LanguageGraph g;
    for (const auto& [lang, cluster] : c.assignment) g.nodes.push_back(lang);
    const std::size_t n = g.nodes.size();
    g.adjacency.assign(n * n, 0);
    auto index = [&](const LanguageId& lang) {
        return static_cast<std::size_t>(
            std::lower_bound(g.nodes.begin(), g.nodes.end(), lang) - g.nodes.begin());
    };
    auto connect = [&](std::size_t i, std::size_t j) {
        if (i == j) return;
        g.adjacency[i * n + j] = 1;
        g.adjacency[j * n + i] = 1;
    };
    for (const auto& lang : g.nodes) g.role[lang] = NodeRole::Member;
    for (const auto& medoid : c.medoids) g.role[medoid] = NodeRole::Medoid;
    // member -> own medoid stars
    for (const auto& [lang, cluster] : c.assignment)
        connect(index(lang), index(c.medoids[cluster]));
    // medoid clique
    for (std::size_t a = 0; a < c.medoids.size(); ++a)
        for (std::size_t b = a + 1; b < c.medoids.size(); ++b)
            connect(index(c.medoids[a]), index(c.medoids[b]));
    return g;
}

std::size_t graph_diameter(const LanguageGraph& g) {
    const std::size_t n = g.nodes.size();
    std::size_t diameter = 0;
    for (std::size_t start = 0; start < n; ++start) {
        std::vector<std::size_t> dist(n, SIZE_MAX);
        std::deque<std::size_t> queue{start};
        dist[start] = 0;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t v = 0; v < n; ++v) {
                if (g.edge(u, v) && dist[v] == SIZE_MAX) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (dist[v] == SIZE_MAX)
                throw ComputeError("graph_diameter: graph is disconnected");
            diameter = std::max(diameter, dist[v]);
        }
    }
    return diameter;
}

const char* to_string(ConfigKind kind) {
    switch (kind) {
        case ConfigKind::InterCluster: return "inter_cluster";
        case ConfigKind::IntraCluster: return "intra_cluster";
        case ConfigKind::Random: return "random";
    }
    return "?";
}

std::vector<TransferConfiguration> enumerate_configurations(const Clustering& c,
                                                            std::size_t n_sources,
                                                            std::size_t n_random,
                                                            std::uint64_t seed) {
    std::vector<LanguageId> all_langs;
    for (const auto& [lang, cluster] : c.assignment) all_langs.push_back(lang);
    const auto clusters = c.members();
    for (const auto& cluster : clusters)
        if (cluster.size() < n_sources)
            throw ValidationError("enumerate_configurations: cluster smaller than N_s");

    std::mt19937_64 rng(seed);
    std::vector<TransferConfiguration> out;

    TransferConfiguration inter;
    inter.kind = ConfigKind::InterCluster;
    inter.label = "medoids*";
    inter.sources.insert(c.medoids.begin(), c.medoids.end());
    inter.targets.insert(all_langs.begin(), all_langs.end());
    out.push_back(inter);

    for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
        TransferConfiguration intra;
        intra.kind = ConfigKind::IntraCluster;
        intra.label = c.medoids[ci].code + "*";
        std::vector<LanguageId> pool = clusters[ci];
        std::shuffle(pool.begin(), pool.end(), rng);
        intra.sources.insert(pool.begin(), pool.begin() + static_cast<long>(n_sources));
        intra.targets.insert(clusters[ci].begin(), clusters[ci].end());
        out.push_back(std::move(intra));
    }

    const std::set<LanguageId> medoid_set(c.medoids.begin(), c.medoids.end());
    auto within_one_cluster = [&](const std::set<LanguageId>& set) {
        std::set<std::size_t> seen;
        for (const auto& lang : set) seen.insert(c.assignment.at(lang));
        return seen.size() <= 1;
    };
    std::set<std::set<LanguageId>> emitted;
    for (const auto& cfg : out) emitted.insert(cfg.sources);
    std::size_t attempts = 0;
    while (out.size() < 1 + clusters.size() + n_random) {
        if (++attempts > 10000 * (n_random + 1))
            throw ComputeError("enumerate_configurations: cannot sample enough distinct "
                               "random configurations");
        std::vector<LanguageId> pool = all_langs;
        std::shuffle(pool.begin(), pool.end(), rng);
        std::set<LanguageId> sources(pool.begin(), pool.begin() + static_cast<long>(n_sources));
        if (sources == medoid_set || within_one_cluster(sources)) continue;
        if (!emitted.insert(sources).second) continue;
        TransferConfiguration random_cfg;
        random_cfg.kind = ConfigKind::Random;
        random_cfg.label = "random";
        random_cfg.sources = std::move(sources);
        random_cfg.targets.insert(all_langs.begin(), all_langs.end());
        out.push_back(std::move(random_cfg));
    }
    return out;
}

DeltaReport delta_report(const std::string& task, const std::vector<ScoredRun>& runs) {
    DeltaReport report;
    report.task = task;
    std::map<ModelScale, std::pair<double, std::size_t>> baseline;
    for (const auto& run : runs)
        if (run.kind == ConfigKind::Random) {
            auto& [sum, count] = baseline[run.scale];
            sum += run.f1;
            ++count;
        }
    std::map<std::string, std::map<ModelScale, std::pair<double, std::size_t>>> sums;
    for (const auto& run : runs) {
        if (run.kind == ConfigKind::Random) continue;
        if (std::find(report.labels.begin(), report.labels.end(), run.label) ==
            report.labels.end())
            report.labels.push_back(run.label);
        auto& [sum, count] = sums[run.label][run.scale];
        sum += run.f1;
        ++count;
    }
    for (const auto& [label, by_scale] : sums) {
        for (const auto& [scale, acc] : by_scale) {
            auto base = baseline.find(scale);
            if (base == baseline.end() || base->second.second == 0)
                throw ValidationError("delta_report: no random baseline for scale " +
                                      std::string(to_string(scale)));
            const double config_mean = acc.first / static_cast<double>(acc.second);
            const double random_mean =
                base->second.first / static_cast<double>(base->second.second);
            report.deltas[label][scale] = config_mean - random_mean;
        }
    }
    return report;
}

std::string clustering_to_json(const Clustering& c) {
    nlohmann::json j;
    j["k"] = c.k;
    nlohmann::json medoids = nlohmann::json::array();
    for (const auto& m : c.medoids) medoids.push_back(m.code);
    j["medoids"] = medoids;
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto& [lang, cluster] : c.assignment) assignment[lang.code] = cluster;
    j["assignment"] = assignment;
    j["cost"] = c.cost;
    return j.dump(2);
}

Clustering clustering_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    Clustering c;
    c.k = j.at("k").get<std::size_t>();
    for (const auto& m : j.at("medoids"))
        c.medoids.push_back(LanguageId::parse(m.get<std::string>()));
    for (const auto& [code, cluster] : j.at("assignment").items())
        c.assignment[LanguageId::parse(code)] = cluster.get<std::size_t>();
    c.cost = j.value("cost", 0.0);
    if (c.medoids.size() != c.k)
        throw ValidationError("clustering JSON: medoid count != k");
    for (std::size_t ci = 0; ci < c.medoids.size(); ++ci) {
        auto it = c.assignment.find(c.medoids[ci]);
        if (it == c.assignment.end() || it->second != ci)
            throw ValidationError("clustering JSON: medoid not assigned to its own cluster");
    }
    return c;
}

std::string graph_to_json(const LanguageGraph& g) {
    nlohmann::json j;
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& lang : g.nodes)
        nodes.push_back({{"lang", lang.code},
                         {"role", g.role.at(lang) == NodeRole::Medoid ? "medoid" : "member"}});
    j["nodes"] = nodes;
    nlohmann::json edges = nlohmann::json::array();
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (std::size_t jn = i + 1; jn < g.nodes.size(); ++jn)
            if (g.edge(i, jn))
                edges.push_back({g.nodes[i].code, g.nodes[jn].code});
    j["edges"] = edges;
    return j.dump(2);
}

std::string graph_to_dot(const LanguageGraph& g) {
    std::ostringstream out;
    out << "graph languages {\n";
    for (const auto& lang : g.nodes) {
        out << "  " << lang.code;
        if (g.role.at(lang) == NodeRole::Medoid)
            out << " [shape=doublecircle,color=red]";
        out << ";\n";
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (std::size_t j = i + 1; j < g.nodes.size(); ++j)
            if (g.edge(i, j)) {
                out << "  " << g.nodes[i].code << " -- " << g.nodes[j].code;
                if (g.role.at(g.nodes[i]) == NodeRole::Medoid &&
                    g.role.at(g.nodes[j]) == NodeRole::Medoid)
                    out << " [color=red]";
                out << ";\n";
            }
    out << "}\n";
    return out.str();
}

}  // namespace xling
