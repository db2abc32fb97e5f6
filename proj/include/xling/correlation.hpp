#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xling/distance.hpp"

namespace xling {

enum class ModelScale { Small, Base, Large };

const char* to_string(ModelScale scale);
ModelScale scale_from_string(const std::string& tag);

// Source x target zero-shot F1 scores for one (task, model-scale) setting.
// Missing entries are NaN.
class TransferScoreMatrix {
public:
    TransferScoreMatrix(std::string task, ModelScale scale,
                        std::vector<LanguageId> sources,
                        std::vector<LanguageId> targets,
                        std::vector<double> f1);

    const std::string& task() const { return task_; }
    ModelScale scale() const { return scale_; }
    const std::vector<LanguageId>& sources() const { return sources_; }
    const std::vector<LanguageId>& targets() const { return targets_; }
    double at(std::size_t src, std::size_t tgt) const {
        return f1_[src * targets_.size() + tgt];
    }
    std::optional<std::size_t> target_index(const LanguageId& lang) const;

private:
    std::string task_;
    ModelScale scale_;
    std::vector<LanguageId> sources_;
    std::vector<LanguageId> targets_;
    std::vector<double> f1_;
};

// Score CSV: `# task=<t> scale=<small|base|large>`, header `src\tgt,...`,
// NA for missing entries.
std::string transfer_scores_to_csv(const TransferScoreMatrix& m);
TransferScoreMatrix parse_transfer_scores(const std::string& csv_text,
                                          const std::string& origin = "<string>");
TransferScoreMatrix load_transfer_scores(const std::string& path);
void save_transfer_scores(const TransferScoreMatrix& m, const std::string& path);

// Sample Pearson correlation. Throws on length < 2 or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct CorrelationReport {
    MetricId metric = MetricId::Combined;
    // rho* = -pearson(distances, scores), so higher means better predictor.
    std::map<LanguageId, double> per_source;
    double mean = 0.0;
    std::size_t undefined_sources = 0;  // zero-variance rows excluded from mean
    std::vector<std::pair<std::string, ModelScale>> settings;
};

CorrelationReport distance_transfer_correlation(const DistanceMatrix& D,
                                                const TransferScoreMatrix& S,
                                                bool exclude_self = true);

struct SweepEntry {
    MetricId metric;
    std::string task;
    ModelScale scale;
    std::optional<CorrelationReport> report;  // empty on per-metric failure
    std::string error;
};

// One report per (base metric, setting); failures are isolated per entry.
std::vector<SweepEntry> correlation_sweep(
    const std::map<FeatureClass, FeatureTable>& tables,
    const std::vector<TransferScoreMatrix>& scores, bool exclude_self = true);

std::string correlation_report_to_csv(const CorrelationReport& r);
std::string correlation_report_to_json(const CorrelationReport& r);

}  // namespace xling
