#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xling/correlation.hpp"
#include "xling/distance.hpp"

namespace xling {

struct Clustering {
    std::size_t k = 0;
    std::map<LanguageId, std::size_t> assignment;
    std::vector<LanguageId> medoids;  // one per cluster, index = cluster id
    double cost = 0.0;

    std::vector<std::vector<LanguageId>> members() const;
};

// k-medoids. Instances with C(n,k) <= 10^4 are solved by exact enumeration
// (ties to the lexicographically smallest medoid set); larger ones fall back
// to PAM, greedy BUILD then SWAP to a local optimum. Asymmetric inputs are
// symmetrized by averaging (warning counted in *symmetrized if given).
// Membership cost uses member-to-medoid entries only; diagonal is ignored.
Clustering pam(const DistanceMatrix& D, std::size_t k, std::uint64_t seed = 0,
               bool* symmetrized = nullptr);

// Exhaustive global optimum over all medoid sets; test oracle for pam.
// Ties broken by lexicographically smallest medoid index set.
Clustering brute_force_medoids(const DistanceMatrix& D, std::size_t k);

// Largest k whose PAM clustering keeps every cluster at >= min_size members.
std::pair<std::size_t, Clustering> select_k(const DistanceMatrix& D,
                                            std::size_t min_size = 3,
                                            std::uint64_t seed = 0);

enum class NodeRole { Medoid, Member };

struct LanguageGraph {
    std::vector<LanguageId> nodes;
    std::vector<std::uint8_t> adjacency;  // row-major, symmetric, zero diagonal
    std::map<LanguageId, NodeRole> role;

    bool edge(std::size_t i, std::size_t j) const { return adjacency[i * nodes.size() + j]; }
    std::size_t edge_count() const;
};

// Star edges member<->own medoid plus a clique over medoids.
LanguageGraph build_relation_graph(const Clustering& c);

// Longest shortest path; throws ComputeError when disconnected.
std::size_t graph_diameter(const LanguageGraph& g);

enum class ConfigKind { InterCluster, IntraCluster, Random };

const char* to_string(ConfigKind kind);

struct TransferConfiguration {
    ConfigKind kind = ConfigKind::Random;
    std::string label;
    std::set<LanguageId> sources;
    std::set<LanguageId> targets;
};

// One inter-cluster configuration (sources = medoids, targets = all), one
// seeded intra-cluster sample per cluster, and n_random seeded random
// configurations with |sources| = n_sources that are neither the medoid set
// nor contained in a single cluster.
std::vector<TransferConfiguration> enumerate_configurations(const Clustering& c,
                                                            std::size_t n_sources,
                                                            std::size_t n_random,
                                                            std::uint64_t seed);

struct ScoredRun {
    std::string label;  // configuration label, e.g. "medoids*", "tur*", "random"
    ConfigKind kind = ConfigKind::Random;
    ModelScale scale = ModelScale::Base;
    double f1 = 0.0;
};

struct DeltaReport {
    std::string task;
    // label -> scale -> mean configuration F1 minus mean random F1
    std::vector<std::string> labels;
    std::map<std::string, std::map<ModelScale, double>> deltas;
};

// Mean F1 per (label, scale) minus the mean of random runs at that scale.
DeltaReport delta_report(const std::string& task, const std::vector<ScoredRun>& runs);

std::string clustering_to_json(const Clustering& c);
Clustering clustering_from_json(const std::string& json_text);
std::string graph_to_json(const LanguageGraph& g);
std::string graph_to_dot(const LanguageGraph& g);

}  // namespace xling
