#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "xling/error.hpp"

namespace xling {

// 3-letter lowercase ISO-style language code.
struct LanguageId {
    std::string code;

    static LanguageId parse(const std::string& text);
    auto operator<=>(const LanguageId&) const = default;
};

enum class FeatureClass { Fam, Geo, Syntax, Phonology, Inventory };

const char* to_string(FeatureClass cls);
FeatureClass feature_class_from_string(const std::string& tag);

// Geo carries real distances-to-fixed-points; everything else is binary.
inline bool is_binary_class(FeatureClass cls) { return cls != FeatureClass::Geo; }

// Missing cells are NaN; only binary classes may contain them.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double cell) { return std::isnan(cell); }

struct FeatureVector {
    FeatureClass cls = FeatureClass::Syntax;
    std::vector<double> values;

    std::size_t dims() const { return values.size(); }
};

// Immutable once built; rows kept sorted by language code so downstream
// results do not depend on input row order.
class FeatureTable {
public:
    FeatureTable(FeatureClass cls, std::size_t dims,
                 std::map<LanguageId, FeatureVector> rows);

    FeatureClass cls() const { return cls_; }
    std::size_t dims() const { return dims_; }
    std::size_t size() const { return rows_.size(); }

    const std::vector<LanguageId>& languages() const { return langs_; }
    const FeatureVector& row(const LanguageId& lang) const;
    bool contains(const LanguageId& lang) const { return rows_.count(lang) > 0; }

private:
    FeatureClass cls_;
    std::size_t dims_;
    std::map<LanguageId, FeatureVector> rows_;
    std::vector<LanguageId> langs_;
};

// Feature CSV: header `lang,f1,...,fN`; binary cells 0/1/?, geo cells decimal.
FeatureTable load_feature_table(const std::string& path, FeatureClass cls);
FeatureTable parse_feature_table(const std::string& csv_text, FeatureClass cls,
                                 const std::string& origin = "<string>");
std::string feature_table_to_csv(const FeatureTable& table);
void save_feature_table(const FeatureTable& table, const std::string& path);

// Result of pairwise deletion over two binary vectors.
struct AlignedPair {
    std::vector<std::uint8_t> x;
    std::vector<std::uint8_t> y;
    std::size_t n_obs = 0;
};

// Keeps only the dimensions observed in both vectors. Throws ComputeError
// when no dimension is co-observed.
AlignedPair align_pair(const FeatureVector& x, const FeatureVector& y);

// The 17 language codes of the study registry.
const std::vector<LanguageId>& default_registry();

}  // namespace xling
