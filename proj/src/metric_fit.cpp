#include "xling/metric_fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace xling {

void MetricWeights::validate() const {
    if (components.empty() || components.size() != weights.size())
        throw ValidationError("metric weights: component/weight length mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ValidationError("metric weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("metric weights must sum to 1");
}

MetricWeights preset_dcomb() {
    return MetricWeights{
        {MetricId::AnderSyntax, MetricId::InnerPhonology, MetricId::AnderInventory},
        {0.4, 0.2, 0.4}};
}

namespace {

DistanceMatrix blend(const std::vector<DistanceMatrix>& components,
                     const std::vector<double>& weights) {
    std::vector<std::pair<const DistanceMatrix*, double>> parts;
    parts.reserve(components.size());
    for (std::size_t i = 0; i < components.size(); ++i)
        parts.push_back({&components[i], weights[i]});
    return combined_distance(parts);
}

double evaluate(const std::vector<DistanceMatrix>& components,
                const std::vector<double>& weights,
                const std::vector<TransferScoreMatrix>& scores, bool exclude_self) {
    auto D = blend(components, weights);
    double sum = 0.0;
    for (const auto& S : scores)
        sum += distance_transfer_correlation(D, S, exclude_self).mean;
    return sum / static_cast<double>(scores.size());
}

// Enumerates all length-m compositions of `total` lattice units, in
// lexicographic order of the resulting weight vectors.
void lattice_points(std::size_t m, std::size_t total,
                    std::vector<std::size_t>& prefix,
                    std::vector<std::vector<std::size_t>>& out) {
    if (m == 1) {
        prefix.push_back(total);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (std::size_t units = 0; units <= total; ++units) {
        prefix.push_back(units);
        lattice_points(m - 1, total - units, prefix, out);
        prefix.pop_back();
    }
}

void renormalize(std::vector<double>& w) {
    double sum = 0.0;
    for (double& v : w) {
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    for (double& v : w) v /= sum;
}

}  // namespace

double fit_objective(const MetricWeights& weights,
                     const std::vector<DistanceMatrix>& components,
                     const std::vector<TransferScoreMatrix>& scores,
                     bool exclude_self) {
    weights.validate();
    if (weights.components.size() != components.size())
        throw ValidationError("fit_objective: weight/component count mismatch");
    if (scores.empty()) throw ValidationError("fit_objective: no score settings");
    return evaluate(components, weights.weights, scores, exclude_self);
}

FitResult fit_weights(const std::vector<DistanceMatrix>& components,
                      const std::vector<TransferScoreMatrix>& scores,
                      double grid_step, bool exclude_self) {
    if (components.size() < 1 || components.size() > 6)
        throw ValidationError("fit_weights: need 1-6 components");
    if (scores.empty()) throw ValidationError("fit_weights: no score settings");
    const double inv = 1.0 / grid_step;
    const auto total = static_cast<std::size_t>(std::llround(inv));
    if (total == 0 || std::abs(inv - static_cast<double>(total)) > 1e-9)
        throw ValidationError("fit_weights: grid_step must divide 1 evenly");

    const std::size_t m = components.size();
    std::vector<std::vector<std::size_t>> lattice;
    std::vector<std::size_t> prefix;
    lattice_points(m, total, prefix, lattice);

    std::vector<double> best;
    double best_obj = -std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    for (const auto& point : lattice) {
        std::vector<double> w(m);
        for (std::size_t i = 0; i < m; ++i)
            w[i] = static_cast<double>(point[i]) / static_cast<double>(total);
        ++evaluated;
        double obj;
        try {
            obj = evaluate(components, w, scores, exclude_self);
        } catch (const ComputeError&) {
            continue;
        }
        if (obj > best_obj || (obj == best_obj && w < best)) {
            best_obj = obj;
            best = w;
        }
    }
    if (best.empty())
        throw ComputeError("fit_weights: objective undefined on every lattice candidate");

    // Coordinate-pair refinement: shift mass between two components at a
    // halving step until below 1e-3.
    for (double step = grid_step / 2.0; step >= 1e-3; step /= 2.0) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (i == j || best[i] < step) continue;
                    std::vector<double> w = best;
                    w[i] -= step;
                    w[j] += step;
                    renormalize(w);
                    ++evaluated;
                    double obj;
                    try {
                        obj = evaluate(components, w, scores, exclude_self);
                    } catch (const ComputeError&) {
                        continue;
                    }
                    if (obj > best_obj || (obj == best_obj && w < best)) {
                        best_obj = obj;
                        best = w;
                        improved = true;
                    }
                }
            }
        }
    }
    renormalize(best);

    FitResult result;
    result.weights.components.reserve(m);
    for (const auto& c : components) result.weights.components.push_back(c.metric());
    result.weights.weights = std::move(best);
    result.objective = best_obj;
    result.candidates_evaluated = evaluated;
    return result;
}

std::string fit_result_to_json(const FitResult& r) {
    nlohmann::json j;
    nlohmann::json comps = nlohmann::json::array();
    for (MetricId id : r.weights.components) comps.push_back(to_string(id));
    j["components"] = comps;
    j["weights"] = r.weights.weights;
    j["objective"] = r.objective;
    j["candidates_evaluated"] = r.candidates_evaluated;
    return j.dump(2);
}

}  // namespace xling
