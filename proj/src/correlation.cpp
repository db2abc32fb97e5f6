#include "xling/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace xling {

const char* to_string(ModelScale scale) {
    switch (scale) {
        case ModelScale::Small: return "small";
        case ModelScale::Base: return "base";
        case ModelScale::Large: return "large";
    }
    return "?";
}

ModelScale scale_from_string(const std::string& tag) {
    if (tag == "small") return ModelScale::Small;
    if (tag == "base") return ModelScale::Base;
    if (tag == "large") return ModelScale::Large;
    throw ValidationError("unknown model scale '" + tag + "'");
}

TransferScoreMatrix::TransferScoreMatrix(std::string task, ModelScale scale,
                                         std::vector<LanguageId> sources,
                                         std::vector<LanguageId> targets,
                                         std::vector<double> f1)
    : task_(std::move(task)),
      scale_(scale),
      sources_(std::move(sources)),
      targets_(std::move(targets)),
      f1_(std::move(f1)) {
    if (sources_.size() < 2 || targets_.size() < 2)
        throw ValidationError("transfer scores need at least 2 source and 2 target languages");
    if (f1_.size() != sources_.size() * targets_.size())
        throw ValidationError("transfer score matrix shape mismatch");
    for (double v : f1_) {
        if (std::isnan(v)) continue;
        if (!std::isfinite(v) || v < 0.0 || v > 100.0)
            throw ValidationError("transfer F1 scores must lie in [0,100]");
    }
}

std::optional<std::size_t> TransferScoreMatrix::target_index(const LanguageId& lang) const {
    auto it = std::find(targets_.begin(), targets_.end(), lang);
    if (it == targets_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - targets_.begin());
}

std::string transfer_scores_to_csv(const TransferScoreMatrix& m) {
    std::ostringstream out;
    out << "# task=" << m.task() << " scale=" << to_string(m.scale()) << "\n";
    out << "src\\tgt";
    for (const auto& t : m.targets()) out << ',' << t.code;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < m.sources().size(); ++i) {
        out << m.sources()[i].code;
        for (std::size_t j = 0; j < m.targets().size(); ++j) {
            out << ',';
            if (std::isnan(m.at(i, j))) out << "NA";
            else out << m.at(i, j);
        }
        out << "\n";
    }
    return out.str();
}

TransferScoreMatrix parse_transfer_scores(const std::string& csv_text,
                                          const std::string& origin) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# task=", 0) != 0)
        throw ValidationError(origin + ": missing '# task=...' metadata line");
    std::istringstream meta(line.substr(2));
    std::string token, task;
    ModelScale scale = ModelScale::Base;
    bool have_scale = false;
    while (meta >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
        if (key == "task") task = value;
        else if (key == "scale") { scale = scale_from_string(value); have_scale = true; }
    }
    if (task.empty() || !have_scale)
        throw ValidationError(origin + ": metadata must carry task and scale");

    if (!std::getline(in, line))
        throw ValidationError(origin + ": missing header line");
    std::vector<LanguageId> targets;
    {
        std::stringstream ss(line);
        std::string cell;
        bool head = true;
        while (std::getline(ss, cell, ',')) {
            if (head) { head = false; continue; }
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            targets.push_back(LanguageId::parse(cell));
        }
    }
    std::vector<LanguageId> sources;
    std::vector<double> f1;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        sources.push_back(LanguageId::parse(cell));
        for (std::size_t j = 0; j < targets.size(); ++j) {
            if (!std::getline(ss, cell, ','))
                throw ValidationError(origin + ": short row for " + sources.back().code);
            f1.push_back(cell == "NA" ? std::nan("") : std::stod(cell));
        }
    }
    return TransferScoreMatrix(task, scale, std::move(sources), std::move(targets),
                               std::move(f1));
}

TransferScoreMatrix load_transfer_scores(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open transfer score file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_transfer_scores(buf.str(), path);
}

void save_transfer_scores(const TransferScoreMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write transfer score file: " + path);
    out << transfer_scores_to_csv(m);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw ValidationError("pearson: length mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw ComputeError("pearson: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ComputeError("pearson: zero variance input");
    return sxy / std::sqrt(sxx * syy);
}

CorrelationReport distance_transfer_correlation(const DistanceMatrix& D,
                                                const TransferScoreMatrix& S,
                                                bool exclude_self) {
    CorrelationReport report;
    report.metric = D.metric();
    report.settings.push_back({S.task(), S.scale()});

    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t si = 0; si < S.sources().size(); ++si) {
        const LanguageId& src = S.sources()[si];
        std::vector<double> dists, scores;
        for (const LanguageId& tgt : D.languages()) {
            if (exclude_self && tgt == src) continue;
            auto ti = S.target_index(tgt);
            if (!ti) continue;
            const double f1 = S.at(si, *ti);
            if (std::isnan(f1)) continue;
            std::size_t di;
            try {
                di = D.index_of(src);
            } catch (const ValidationError&) {
                continue;  // source not covered by the distance matrix
            }
            dists.push_back(D.at(di, D.index_of(tgt)));
            scores.push_back(f1);
        }
        if (dists.size() < 3)
            throw ComputeError("insufficient shared targets for source " + src.code +
                               " (" + std::to_string(dists.size()) + " < 3)");
        try {
            const double rho = -pearson(dists, scores);
            report.per_source[src] = rho;
            sum += rho;
            ++defined;
        } catch (const ComputeError&) {
            ++report.undefined_sources;
        }
    }
    if (defined == 0)
        throw ComputeError("distance_transfer_correlation: all source rows undefined");
    report.mean = sum / static_cast<double>(defined);
    return report;
}

std::vector<SweepEntry> correlation_sweep(
    const std::map<FeatureClass, FeatureTable>& tables,
    const std::vector<TransferScoreMatrix>& scores, bool exclude_self) {
    std::vector<SweepEntry> out;
    for (MetricId metric : all_base_metrics()) {
        auto table = tables.find(metric_feature_class(metric));
        for (const auto& S : scores) {
            SweepEntry entry{metric, S.task(), S.scale(), std::nullopt, ""};
            try {
                if (table == tables.end())
                    throw ValidationError("no feature table for class " +
                                          std::string(to_string(metric_feature_class(metric))));
                auto D = build_distance_matrix(table->second, metric, true);
                entry.report = distance_transfer_correlation(D, S, exclude_self);
            } catch (const std::exception& e) {
                entry.error = to_string(metric) + std::string(": ") + e.what();
            }
            out.push_back(std::move(entry));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const SweepEntry& a, const SweepEntry& b) {
        if (a.metric != b.metric) return a.metric < b.metric;
        if (a.task != b.task) return a.task < b.task;
        return a.scale < b.scale;
    });
    return out;
}

std::string correlation_report_to_csv(const CorrelationReport& r) {
    std::ostringstream out;
    out << "# metric=" << to_string(r.metric) << "\n";
    out << "source,rho\n";
    out.precision(17);
    for (const auto& [lang, rho] : r.per_source) out << lang.code << ',' << rho << "\n";
    out << "mean," << r.mean << "\n";
    return out.str();
}

std::string correlation_report_to_json(const CorrelationReport& r) {
    nlohmann::json j;
    j["metric"] = to_string(r.metric);
    j["mean"] = r.mean;
    j["undefined_sources"] = r.undefined_sources;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [lang, rho] : r.per_source) per[lang.code] = rho;
    j["per_source"] = per;
    nlohmann::json settings = nlohmann::json::array();
    for (const auto& [task, scale] : r.settings)
        settings.push_back({{"task", task}, {"scale", to_string(scale)}});
    j["settings"] = settings;
    return j.dump(2);
}

}  // namespace xling
