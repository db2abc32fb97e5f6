#include "xling/distance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace xling {

ContingencyCounts contingency(const AlignedPair& pair) {
    ContingencyCounts counts;
    for (std::size_t i = 0; i < pair.n_obs; ++i) {
        if (pair.x[i] && pair.y[i]) ++counts.a;
        else if (pair.x[i]) ++counts.b;
        else if (pair.y[i]) ++counts.c;
        else ++counts.d;
    }
    return counts;
}

ContingencyCounts contingency(const FeatureVector& x, const FeatureVector& y) {
    return contingency(align_pair(x, y));
}

const char* to_string(BinaryKind kind) {
    switch (kind) {
        case BinaryKind::Hamming: return "hamming";
        case BinaryKind::Jaccard: return "jaccard";
        case BinaryKind::Inner: return "inner";
        case BinaryKind::Anderberg: return "ander";
    }
    return "?";
}

double binary_distance(BinaryKind kind, const ContingencyCounts& counts) {
    const double a = static_cast<double>(counts.a);
    const double b = static_cast<double>(counts.b);
    const double c = static_cast<double>(counts.c);
    const double d = static_cast<double>(counts.d);
    const double n = a + b + c + d;
    if (counts.n() == 0)
        throw ComputeError("binary_distance: empty contingency counts");
    switch (kind) {
        case BinaryKind::Hamming:
            return (b + c) / n;
        case BinaryKind::Jaccard: {
            const double denom = a + b + c;
            return denom == 0.0 ? 0.0 : 1.0 - a / denom;
        }
        case BinaryKind::Inner:
            return 1.0 - a / n;
        case BinaryKind::Anderberg: {
            const double sim = (std::max(a, b) + std::max(c, d) + std::max(a, c) +
                                std::max(b, d) - std::max(a + c, b + d) -
                                std::max(a + b, c + d)) /
                               (2.0 * n);
            return 1.0 - 2.0 * sim;
        }
    }
    throw ComputeError("binary_distance: unknown kind");
}

double euclidean_distance(const FeatureVector& x, const FeatureVector& y) {
    if (x.cls != y.cls || (x.cls != FeatureClass::Fam && x.cls != FeatureClass::Geo))
        throw ValidationError("euclidean_distance: requires matching fam or geo vectors");
    if (x.dims() != y.dims())
        throw ValidationError("euclidean_distance: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.dims(); ++i) {
        if (is_missing(x.values[i]) || is_missing(y.values[i]))
            throw ValidationError("euclidean_distance: missing cell present");
        const double diff = x.values[i] - y.values[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

const std::vector<MetricId>& all_base_metrics() {
    static const std::vector<MetricId> ids = {
        MetricId::HammingSyntax,    MetricId::JaccardSyntax,
        MetricId::InnerSyntax,      MetricId::AnderSyntax,
        MetricId::HammingPhonology, MetricId::JaccardPhonology,
        MetricId::InnerPhonology,   MetricId::AnderPhonology,
        MetricId::HammingInventory, MetricId::JaccardInventory,
        MetricId::InnerInventory,   MetricId::AnderInventory,
        MetricId::EuclidFam,        MetricId::EuclidGeo,
    };
    return ids;
}

std::string to_string(MetricId id) {
    switch (id) {
        case MetricId::HammingSyntax: return "hamming-syntax";
        case MetricId::JaccardSyntax: return "jaccard-syntax";
        case MetricId::InnerSyntax: return "inner-syntax";
        case MetricId::AnderSyntax: return "ander-syntax";
        case MetricId::HammingPhonology: return "hamming-phonology";
        case MetricId::JaccardPhonology: return "jaccard-phonology";
        case MetricId::InnerPhonology: return "inner-phonology";
        case MetricId::AnderPhonology: return "ander-phonology";
        case MetricId::HammingInventory: return "hamming-inventory";
        case MetricId::JaccardInventory: return "jaccard-inventory";
        case MetricId::InnerInventory: return "inner-inventory";
        case MetricId::AnderInventory: return "ander-inventory";
        case MetricId::EuclidFam: return "euclid-fam";
        case MetricId::EuclidGeo: return "euclid-geo";
        case MetricId::Combined: return "combined";
    }
    return "?";
}

MetricId metric_from_string(const std::string& name) {
    for (MetricId id : all_base_metrics())
        if (to_string(id) == name) return id;
    if (name == "combined") return MetricId::Combined;
    throw ValidationError("unknown metric '" + name + "'");
}

FeatureClass metric_feature_class(MetricId id) {
    switch (id) {
        case MetricId::HammingSyntax:
        case MetricId::JaccardSyntax:
        case MetricId::InnerSyntax:
        case MetricId::AnderSyntax: return FeatureClass::Syntax;
        case MetricId::HammingPhonology:
        case MetricId::JaccardPhonology:
        case MetricId::InnerPhonology:
        case MetricId::AnderPhonology: return FeatureClass::Phonology;
        case MetricId::HammingInventory:
        case MetricId::JaccardInventory:
        case MetricId::InnerInventory:
        case MetricId::AnderInventory: return FeatureClass::Inventory;
        case MetricId::EuclidFam: return FeatureClass::Fam;
        case MetricId::EuclidGeo: return FeatureClass::Geo;
        case MetricId::Combined: break;
    }
    throw ValidationError("combined metric has no single feature class");
}

std::optional<BinaryKind> metric_binary_kind(MetricId id) {
    switch (id) {
        case MetricId::HammingSyntax:
        case MetricId::HammingPhonology:
        case MetricId::HammingInventory: return BinaryKind::Hamming;
        case MetricId::JaccardSyntax:
        case MetricId::JaccardPhonology:
        case MetricId::JaccardInventory: return BinaryKind::Jaccard;
        case MetricId::InnerSyntax:
        case MetricId::InnerPhonology:
        case MetricId::InnerInventory: return BinaryKind::Inner;
        case MetricId::AnderSyntax:
        case MetricId::AnderPhonology:
        case MetricId::AnderInventory: return BinaryKind::Anderberg;
        default: return std::nullopt;
    }
}

DistanceMatrix::DistanceMatrix(MetricId metric, std::vector<LanguageId> langs,
                               std::vector<double> values, bool normalized,
                               bool degenerate)
    : metric_(metric),
      langs_(std::move(langs)),
      values_(std::move(values)),
      normalized_(normalized),
      degenerate_(degenerate) {
    if (values_.size() != langs_.size() * langs_.size())
        throw ValidationError("distance matrix must be square over its language list");
    for (double v : values_)
        if (!std::isfinite(v))
            throw ValidationError("distance matrix contains a non-finite value");
}

std::size_t DistanceMatrix::index_of(const LanguageId& lang) const {
    auto it = std::find(langs_.begin(), langs_.end(), lang);
    if (it == langs_.end())
        throw ValidationError("language '" + lang.code + "' not in distance matrix");
    return static_cast<std::size_t>(it - langs_.begin());
}

double DistanceMatrix::at(const LanguageId& a, const LanguageId& b) const {
    return at(index_of(a), index_of(b));
}

DistanceMatrix build_distance_matrix(const FeatureTable& table, MetricId metric,
                                     bool normalize) {
    if (metric == MetricId::Combined)
        throw ValidationError("combined matrices come from combined_distance, not a table");
    if (metric_feature_class(metric) != table.cls())
        throw ValidationError("metric " + to_string(metric) +
                              " does not match table class " + to_string(table.cls()));
    const auto& langs = table.languages();
    const std::size_t n = langs.size();
    std::vector<double> values(n * n, 0.0);
    const auto kind = metric_binary_kind(metric);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double d;
            if (kind) {
                try {
                    d = binary_distance(*kind, contingency(table.row(langs[i]), table.row(langs[j])));
                } catch (const ComputeError&) {
                    throw ComputeError("incomparable pair (" + langs[i].code + ", " +
                                       langs[j].code + ") under metric " + to_string(metric));
                }
            } else {
                d = euclidean_distance(table.row(langs[i]), table.row(langs[j]));
            }
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix out(metric, langs, std::move(values), false);
    return normalize ? normalize_matrix(out) : out;
}

DistanceMatrix normalize_matrix(const DistanceMatrix& m) {
    const std::size_t n = m.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) {
                lo = std::min(lo, m.at(i, j));
                hi = std::max(hi, m.at(i, j));
            }
    std::vector<double> values(m.raw());
    if (n < 2 || lo == hi) {
        // Constant off-diagonal: everything maps to 0, flagged degenerate.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) values[i * n + j] = 0.0;
        // Diagonal shifts by the same offset, floored at 0.
        for (std::size_t i = 0; i < n; ++i)
            values[i * n + i] = std::max(0.0, values[i * n + i] - lo);
        return DistanceMatrix(m.metric(), m.languages(), std::move(values), true, true);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            values[i * n + j] = (values[i * n + j] - lo) / span;
    return DistanceMatrix(m.metric(), m.languages(), std::move(values), true, false);
}

DistanceMatrix combined_distance(
    const std::vector<std::pair<const DistanceMatrix*, double>>& components) {
    if (components.empty())
        throw ValidationError("combined_distance: no components");
    const auto& first = *components.front().first;
    double weight_sum = 0.0;
    for (const auto& [matrix, weight] : components) {
        if (!matrix->normalized())
            throw ValidationError("combined_distance: component " +
                                  to_string(matrix->metric()) + " is not normalized");
        if (matrix->languages() != first.languages())
            throw ValidationError("combined_distance: component language lists differ");
        if (weight < 0.0)
            throw ValidationError("combined_distance: negative weight");
        weight_sum += weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9)
        throw ValidationError("combined_distance: weights must sum to 1");
    const std::size_t n = first.size();
    std::vector<double> values(n * n, 0.0);
    for (const auto& [matrix, weight] : components)
        for (std::size_t i = 0; i < n * n; ++i)
            values[i] += weight * matrix->raw()[i];
    return DistanceMatrix(MetricId::Combined, first.languages(), std::move(values), true);
}

std::string distance_matrix_to_csv(const DistanceMatrix& m) {
    std::ostringstream out;
    out << "# metric=" << to_string(m.metric())
        << " normalized=" << (m.normalized() ? "true" : "false");
    if (m.degenerate()) out << " degenerate=true";
    out << "\nlang";
    for (const auto& lang : m.languages()) out << ',' << lang.code;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.languages()[i].code;
        for (std::size_t j = 0; j < m.size(); ++j) out << ',' << m.at(i, j);
        out << "\n";
    }
    return out.str();
}

DistanceMatrix parse_distance_matrix(const std::string& csv_text,
                                     const std::string& origin) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# metric=", 0) != 0)
        throw ValidationError(origin + ": missing '# metric=...' metadata line");
    std::istringstream meta(line.substr(2));
    std::string token;
    MetricId metric = MetricId::Combined;
    bool normalized = false, degenerate = false, have_metric = false;
    while (meta >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
        if (key == "metric") { metric = metric_from_string(value); have_metric = true; }
        else if (key == "normalized") normalized = (value == "true");
        else if (key == "degenerate") degenerate = (value == "true");
    }
    if (!have_metric) throw ValidationError(origin + ": metadata lacks metric id");

    if (!std::getline(in, line))
        throw ValidationError(origin + ": missing header line");
    std::vector<LanguageId> langs;
    {
        std::stringstream ss(line);
        std::string cell;
        bool head = true;
        while (std::getline(ss, cell, ',')) {
            if (head) { head = false; continue; }
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            langs.push_back(LanguageId::parse(cell));
        }
    }
    const std::size_t n = langs.size();
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw ValidationError(origin + ": truncated matrix body");
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        if (cell != langs[i].code)
            throw ValidationError(origin + ": row order does not match header");
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::getline(ss, cell, ','))
                throw ValidationError(origin + ": short row for " + langs[i].code);
            values[i * n + j] = std::stod(cell);
        }
    }
    return DistanceMatrix(metric, std::move(langs), std::move(values), normalized, degenerate);
}

void save_distance_matrix(const DistanceMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write distance matrix: " + path);
    out << distance_matrix_to_csv(m);
}

DistanceMatrix load_distance_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open distance matrix: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_distance_matrix(buf.str(), path);
}

}  // namespace xling
