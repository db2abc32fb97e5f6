#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xling/correlation.hpp"
#include "xling/selection.hpp"

namespace xling {

// One table row: per-scale deltas for a configuration under one method.
struct DeltaRow {
    std::string task;
    std::string config;  // "medoids*", "tur*", ... or "task_avg"
    std::string method;  // e.g. "zscl-m", "zscl-r", "dann"
    std::optional<double> small, base, large;
    std::optional<double> model_avg;  // computed from the scales when absent
};

struct DeltaTable {
    std::vector<DeltaRow> rows;
};

// Input CSV: header `task,config,method,small,base,large[,model_avg]`;
// blank cells allowed; task_avg rows optional (recomputed when absent).
DeltaTable parse_delta_table(const std::string& csv_text,
                             const std::string& origin = "<string>");

// Fills missing model_avg cells and appends per-(task, method) task_avg
// rows. Aggregates are means of the unrounded inputs.
DeltaTable complete_delta_table(const DeltaTable& input);

// One decimal place, half away from zero, like the published tables.
double round1(double v);

// `task,config,method,SMALL,BASE,LARGE,MODEL_AVG` with one-decimal cells.
std::string render_delta_table_csv(const DeltaTable& table);

// DeltaReport (selection/adversarial output) -> renderable rows.
DeltaTable delta_report_to_table(const DeltaReport& report, const std::string& method);

// Minimal standalone SVG heatmap.
std::string svg_heatmap(const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::vector<double>& values,  // row-major
                        const std::string& title);

// Pairwise Pearson correlation of metric matrices over their off-diagonal
// entries; all matrices must share one language list.
std::vector<double> metric_metric_correlation(const std::vector<DistanceMatrix>& matrices);

std::string metric_correlation_to_csv(const std::vector<DistanceMatrix>& matrices,
                                      const std::vector<double>& corr);

}  // namespace xling
