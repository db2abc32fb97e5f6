#pragma once

#include <string>
#include <vector>

#include "xling/correlation.hpp"

namespace xling {

// Simplex point over an ordered list of component metrics.
struct MetricWeights {
    std::vector<MetricId> components;
    std::vector<double> weights;

    void validate() const;
};

// {0.4 ander-syntax, 0.2 inner-phonology, 0.4 ander-inventory}
MetricWeights preset_dcomb();

struct FitResult {
    MetricWeights weights;
    double objective = 0.0;
    std::size_t candidates_evaluated = 0;
};

// Mean rho* of the weighted combination across all score settings.
double fit_objective(const MetricWeights& weights,
                     const std::vector<DistanceMatrix>& components,
                     const std::vector<TransferScoreMatrix>& scores,
                     bool exclude_self = true);

// Exhaustive simplex-lattice search at grid_step, then coordinate-pair
// refinement with halving steps down to 1e-3. Deterministic; ties broken
// by lexicographically smallest weight vector.
FitResult fit_weights(const std::vector<DistanceMatrix>& components,
                      const std::vector<TransferScoreMatrix>& scores,
                      double grid_step = 0.05, bool exclude_self = true);

std::string fit_result_to_json(const FitResult& r);

}  // namespace xling
