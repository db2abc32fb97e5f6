#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "xling/feature_store.hpp"

namespace xling {

// Agreement counts between two aligned binary vectors:
// a = both 1, b = x only, c = y only, d = both 0.
struct ContingencyCounts {
    std::size_t a = 0, b = 0, c = 0, d = 0;
    std::size_t n() const { return a + b + c + d; }
};

ContingencyCounts contingency(const FeatureVector& x, const FeatureVector& y);
ContingencyCounts contingency(const AlignedPair& pair);

enum class BinaryKind { Hamming, Jaccard, Inner, Anderberg };

const char* to_string(BinaryKind kind);

// All distances land in [0,1]. Anderberg similarity has range [0, 0.5], so
// its distance is 1 - 2*S_A. Inner-product uses the positive-match dot a/n.
double binary_distance(BinaryKind kind, const ContingencyCounts& counts);

// L2 distance; fam/geo only, no missing cells allowed.
double euclidean_distance(const FeatureVector& x, const FeatureVector& y);

// The 14 base metrics plus the combined tag.
enum class MetricId {
    HammingSyntax, JaccardSyntax, InnerSyntax, AnderSyntax,
    HammingPhonology, JaccardPhonology, InnerPhonology, AnderPhonology,
    HammingInventory, JaccardInventory, InnerInventory, AnderInventory,
    EuclidFam, EuclidGeo,
    Combined,
};

const std::vector<MetricId>& all_base_metrics();
std::string to_string(MetricId id);
MetricId metric_from_string(const std::string& name);
FeatureClass metric_feature_class(MetricId id);
std::optional<BinaryKind> metric_binary_kind(MetricId id);

class DistanceMatrix {
public:
    DistanceMatrix(MetricId metric, std::vector<LanguageId> langs,
                   std::vector<double> values, bool normalized,
                   bool degenerate = false);

    MetricId metric() const { return metric_; }
    const std::vector<LanguageId>& languages() const { return langs_; }
    std::size_t size() const { return langs_.size(); }
    bool normalized() const { return normalized_; }
    bool degenerate() const { return degenerate_; }

    double at(std::size_t i, std::size_t j) const { return values_[i * langs_.size() + j]; }
    double at(const LanguageId& a, const LanguageId& b) const;
    std::size_t index_of(const LanguageId& lang) const;
    const std::vector<double>& raw() const { return values_; }

private:
    MetricId metric_;
    std::vector<LanguageId> langs_;
    std::vector<double> values_;
    bool normalized_;
    bool degenerate_;
};

// All-pairs matrix for one metric. Diagonal entries are computed, never
// clamped (Anderberg self-distance can be positive). Normalization min-max
// rescales over off-diagonal entries; a constant off-diagonal matrix maps
// to zeros and is flagged degenerate.
DistanceMatrix build_distance_matrix(const FeatureTable& table, MetricId metric,
                                     bool normalize);

DistanceMatrix normalize_matrix(const DistanceMatrix& m);

// Entrywise weighted sum of normalized component matrices. Weights must be
// non-negative and sum to 1 within 1e-9.
DistanceMatrix combined_distance(
    const std::vector<std::pair<const DistanceMatrix*, double>>& components);

// DistanceMatrix CSV: `# metric=<id> normalized=<bool>` then a square table.
std::string distance_matrix_to_csv(const DistanceMatrix& m);
DistanceMatrix parse_distance_matrix(const std::string& csv_text,
                                     const std::string& origin = "<string>");
void save_distance_matrix(const DistanceMatrix& m, const std::string& path);
DistanceMatrix load_distance_matrix(const std::string& path);

}  // namespace xling
