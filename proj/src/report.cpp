#include "xling/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace xling {

double round1(double v) { return std::round(v * 10.0) / 10.0; }

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::optional<double> parse_cell(const std::string& cell, const std::string& origin,
                                 std::size_t lineno) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t consumed = 0;
        const double v = std::stod(cell, &consumed);
        if (consumed != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(origin + ":" + std::to_string(lineno) +
                              ": unparseable numeric cell '" + cell + "'");
    }
}

std::string fmt1(std::optional<double> v) {
    if (!v) return "";
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << round1(*v);
    std::string s = out.str();
    if (s == "-0.0") s = "0.0";
    return s;
}

}  // namespace

DeltaTable parse_delta_table(const std::string& csv_text, const std::string& origin) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(origin + ": empty delta table");
    auto header = split_line(line);
    std::transform(header.begin(), header.end(), header.begin(), [](std::string h) {
        std::transform(h.begin(), h.end(), h.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return h;
    });
    if (header.size() < 6 || header[0] != "task" || header[1] != "config" ||
        header[2] != "method")
        throw ValidationError(origin +
                              ": header must be task,config,method,small,base,large[,model_avg]");
    const bool has_avg = header.size() >= 7 && header[6] == "model_avg";

    DeltaTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() < 6)
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": short row");
        DeltaRow row;
        row.task = cells[0];
        row.config = cells[1];
        row.method = cells[2];
        row.small = parse_cell(cells[3], origin, lineno);
        row.base = parse_cell(cells[4], origin, lineno);
        row.large = parse_cell(cells[5], origin, lineno);
        if (has_avg && cells.size() >= 7)
            row.model_avg = parse_cell(cells[6], origin, lineno);
        table.rows.push_back(std::move(row));
    }
    return table;
}

DeltaTable complete_delta_table(const DeltaTable& input) {
    DeltaTable out;
    // group keys in first-appearance order
    std::vector<std::pair<std::string, std::string>> groups;
    for (const auto& row : input.rows) {
        auto key = std::make_pair(row.task, row.method);
        if (std::find(groups.begin(), groups.end(), key) == groups.end())
            groups.push_back(key);
    }
    for (const auto& [task, method] : groups) {
        std::vector<DeltaRow> configs;
        std::optional<DeltaRow> given_avg;
        for (const auto& row : input.rows) {
            if (row.task != task || row.method != method) continue;
            if (row.config == "task_avg") given_avg = row;
            else configs.push_back(row);
        }
        double sums[3] = {0, 0, 0};
        std::size_t counts[3] = {0, 0, 0};
        for (auto& row : configs) {
            const std::optional<double> scales[3] = {row.small, row.base, row.large};
            double ssum = 0.0;
            std::size_t scount = 0;
            for (int s = 0; s < 3; ++s) {
                if (!scales[s]) continue;
                sums[s] += *scales[s];
                ++counts[s];
                ssum += *scales[s];
                ++scount;
            }
            if (!row.model_avg && scount > 0)
                row.model_avg = ssum / static_cast<double>(scount);
            out.rows.push_back(row);
        }
        DeltaRow avg;
        if (given_avg) {
            avg = *given_avg;
        } else {
            avg.task = task;
            avg.config = "task_avg";
            avg.method = method;
        }
        std::optional<double>* slots[3] = {&avg.small, &avg.base, &avg.large};
        double asum = 0.0;
        std::size_t acount = 0;
        for (int s = 0; s < 3; ++s) {
            if (!slots[s]->has_value() && counts[s] > 0)
                *slots[s] = sums[s] / static_cast<double>(counts[s]);
            if (slots[s]->has_value()) {
                asum += slots[s]->value();
                ++acount;
            }
        }
        if (!avg.model_avg && acount > 0)
            avg.model_avg = asum / static_cast<double>(acount);
        out.rows.push_back(avg);
    }
    return out;
}

std::string render_delta_table_csv(const DeltaTable& table) {
    std::ostringstream out;
    out << "task,config,method,SMALL,BASE,LARGE,MODEL_AVG\n";
    for (const auto& row : table.rows) {
        out << row.task << ',' << row.config << ',' << row.method << ','
            << fmt1(row.small) << ',' << fmt1(row.base) << ',' << fmt1(row.large) << ','
            << fmt1(row.model_avg) << "\n";
    }
    return out.str();
}

DeltaTable delta_report_to_table(const DeltaReport& report, const std::string& method) {
    DeltaTable table;
    for (const auto& label : report.labels) {
        DeltaRow row;
        row.task = report.task;
        row.config = label;
        row.method = method;
        auto it = report.deltas.find(label);
        if (it != report.deltas.end()) {
            auto get = [&](ModelScale s) -> std::optional<double> {
                auto v = it->second.find(s);
                if (v == it->second.end()) return std::nullopt;
                return v->second;
            };
            row.small = get(ModelScale::Small);
            row.base = get(ModelScale::Base);
            row.large = get(ModelScale::Large);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string svg_heatmap(const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::vector<double>& values,
                        const std::string& title) {
    const std::size_t nr = row_labels.size(), nc = col_labels.size();
    if (values.size() != nr * nc)
        throw ValidationError("svg_heatmap: value count does not match labels");
    double lo = 0.0, hi = 1.0;
    if (!values.empty()) {
        lo = *std::min_element(values.begin(), values.end());
        hi = *std::max_element(values.begin(), values.end());
        if (lo == hi) hi = lo + 1.0;
    }
    const int cell = 28, left = 110, top = 60;
    const int width = left + cell * static_cast<int>(nc) + 20;
    const int height = top + cell * static_cast<int>(nr) + 20;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    out << "<text x=\"10\" y=\"20\" font-size=\"14\" font-family=\"sans-serif\">"
        << title << "</text>\n";
    for (std::size_t j = 0; j < nc; ++j)
        out << "<text x=\"" << left + static_cast<int>(j) * cell + cell / 2
            << "\" y=\"" << top - 8
            << "\" font-size=\"9\" font-family=\"sans-serif\" text-anchor=\"middle\" "
               "transform=\"rotate(-45 "
            << left + static_cast<int>(j) * cell + cell / 2 << ' ' << top - 8 << ")\">"
            << col_labels[j] << "</text>\n";
    for (std::size_t i = 0; i < nr; ++i) {
        out << "<text x=\"" << left - 6 << "\" y=\""
            << top + static_cast<int>(i) * cell + cell / 2 + 4
            << "\" font-size=\"9\" font-family=\"sans-serif\" text-anchor=\"end\">"
            << row_labels[i] << "</text>\n";
        for (std::size_t j = 0; j < nc; ++j) {
            const double t = (values[i * nc + j] - lo) / (hi - lo);
            // blue (low) -> white -> red (high)
            int r, g, b;
            if (t < 0.5) {
                const double u = t * 2.0;
                r = static_cast<int>(255 * u);
                g = static_cast<int>(255 * u);
                b = 255;
            } else {
                const double u = (t - 0.5) * 2.0;
                r = 255;
                g = static_cast<int>(255 * (1.0 - u));
                b = static_cast<int>(255 * (1.0 - u));
            }
            out << "<rect x=\"" << left + static_cast<int>(j) * cell << "\" y=\""
                << top + static_cast<int>(i) * cell << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << r << ',' << g << ','
                << b << ")\" stroke=\"#ccc\"/>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::vector<double> metric_metric_correlation(const std::vector<DistanceMatrix>& matrices) {
    if (matrices.empty())
        throw ValidationError("metric_metric_correlation: no matrices");
    const auto& langs = matrices.front().languages();
    for (const auto& m : matrices)
        if (m.languages() != langs)
            throw ValidationError("metric_metric_correlation: language lists differ");
    const std::size_t n = langs.size();
    std::vector<std::vector<double>> offdiag;
    for (const auto& m : matrices) {
        std::vector<double> v;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) v.push_back(m.at(i, j));
        offdiag.push_back(std::move(v));
    }
    const std::size_t k = matrices.size();
    std::vector<double> corr(k * k, 1.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
            double rho;
            try {
                rho = pearson(offdiag[a], offdiag[b]);
            } catch (const ComputeError&) {
                rho = 0.0;  // degenerate (constant) matrix
            }
            corr[a * k + b] = rho;
            corr[b * k + a] = rho;
        }
    return corr;
}

std::string metric_correlation_to_csv(const std::vector<DistanceMatrix>& matrices,
                                      const std::vector<double>& corr) {
    std::ostringstream out;
    out << "metric";
    for (const auto& m : matrices) out << ',' << to_string(m.metric());
    out << "\n";
    out.precision(17);
    const std::size_t k = matrices.size();
    for (std::size_t a = 0; a < k; ++a) {
        out << to_string(matrices[a].metric());
        for (std::size_t b = 0; b < k; ++b) out << ',' << corr[a * k + b];
        out << "\n";
    }
    return out.str();
}

}  // namespace xling
