#include "xling/feature_store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace xling {

LanguageId LanguageId::parse(const std::string& text) {
    if (text.size() != 3 ||
        !std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::islower(c) && std::isalpha(c); })) {
        throw ValidationError("invalid language code '" + text +
                              "': expected exactly 3 lowercase ASCII letters");
    }
    return LanguageId{text};
}

const char* to_string(FeatureClass cls) {
    switch (cls) {
        case FeatureClass::Fam: return "fam";
        case FeatureClass::Geo: return "geo";
        case FeatureClass::Syntax: return "syntax";
        case FeatureClass::Phonology: return "phonology";
        case FeatureClass::Inventory: return "inventory";
    }
    return "?";
}

FeatureClass feature_class_from_string(const std::string& tag) {
    if (tag == "fam") return FeatureClass::Fam;
    if (tag == "geo") return FeatureClass::Geo;
    if (tag == "syntax") return FeatureClass::Syntax;
    if (tag == "phonology") return FeatureClass::Phonology;
    if (tag == "inventory") return FeatureClass::Inventory;
    throw ValidationError("unknown feature class '" + tag + "'");
}

FeatureTable::FeatureTable(FeatureClass cls, std::size_t dims,
                           std::map<LanguageId, FeatureVector> rows)
    : cls_(cls), dims_(dims), rows_(std::move(rows)) {
    if (dims_ == 0) throw ValidationError("feature table must have at least 1 dimension");
    if (rows_.size() < 2) throw ValidationError("feature table must have at least 2 languages");
    for (const auto& [lang, vec] : rows_) {
        if (vec.cls != cls_)
            throw ValidationError("row " + lang.code + " has wrong feature class");
        if (vec.dims() != dims_)
            throw ValidationError("dimension mismatch: row " + lang.code + " has " +
                                  std::to_string(vec.dims()) + " cells, expected " +
                                  std::to_string(dims_));
        for (double v : vec.values) {
            if (is_binary_class(cls_)) {
                if (!is_missing(v) && v != 0.0 && v != 1.0)
                    throw ValidationError("non-binary cell in row " + lang.code);
            } else {
                if (is_missing(v))
                    throw ValidationError("missing cell in geo row " + lang.code);
                if (!std::isfinite(v) || v < 0.0)
                    throw ValidationError("geo cell must be a finite non-negative number (row " +
                                          lang.code + ")");
            }
        }
        langs_.push_back(lang);
    }
}

const FeatureVector& FeatureTable::row(const LanguageId& lang) const {
    auto it = rows_.find(lang);
    if (it == rows_.end())
        throw ValidationError("language '" + lang.code + "' not in feature table");
    return it->second;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

FeatureTable parse_feature_table(const std::string& csv_text, FeatureClass cls,
                                 const std::string& origin) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(origin + ": empty feature CSV");
    auto header = split_csv_line(strip(line));
    if (header.empty() || header[0] != "lang")
        throw ValidationError(origin + ": feature CSV header must start with 'lang'");
    const std::size_t dims = header.size() - 1;

    std::map<LanguageId, FeatureVector> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != dims + 1)
            throw ValidationError(origin + ":" + std::to_string(lineno) +
                                  ": dimension mismatch: expected " + std::to_string(dims) +
                                  " cells, got " + std::to_string(cells.size() - 1));
        LanguageId lang = LanguageId::parse(strip(cells[0]));
        if (rows.count(lang))
            throw ValidationError(origin + ": duplicate language '" + lang.code + "'");
        FeatureVector vec;
        vec.cls = cls;
        vec.values.reserve(dims);
        for (std::size_t i = 1; i < cells.size(); ++i) {
            std::string c = strip(cells[i]);
            if (c == "?") {
                if (!is_binary_class(cls))
                    throw ValidationError(origin + ":" + std::to_string(lineno) +
                                          ": missing cell '?' not allowed in geo table");
                vec.values.push_back(kMissing);
                continue;
            }
            std::size_t consumed = 0;
            double v;
            try {
                v = std::stod(c, &consumed);
            } catch (const std::exception&) {
                throw ValidationError(origin + ":" + std::to_string(lineno) +
                                      ": unparseable cell '" + c + "'");
            }
            if (consumed != c.size())
                throw ValidationError(origin + ":" + std::to_string(lineno) +
                                      ": unparseable cell '" + c + "'");
            vec.values.push_back(v);
        }
        rows.emplace(lang, std::move(vec));
    }
    return FeatureTable(cls, dims, std::move(rows));
}

FeatureTable load_feature_table(const std::string& path, FeatureClass cls) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open feature file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_feature_table(buf.str(), cls, path);
}

std::string feature_table_to_csv(const FeatureTable& table) {
    std::ostringstream out;
    out << "lang";
    for (std::size_t i = 1; i <= table.dims(); ++i) out << ",f" << i;
    out << "\n";
    for (const auto& lang : table.languages()) {
        out << lang.code;
        for (double v : table.row(lang).values) {
            out << ',';
            if (is_missing(v)) {
                out << '?';
            } else if (is_binary_class(table.cls())) {
                out << (v == 1.0 ? '1' : '0');
            } else {
                std::ostringstream cell;
                cell.precision(17);
                cell << v;
                out << cell.str();
            }
        }
        out << "\n";
    }
    return out.str();
}

void save_feature_table(const FeatureTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write feature file: " + path);
    out << feature_table_to_csv(table);
}

AlignedPair align_pair(const FeatureVector& x, const FeatureVector& y) {
    if (x.cls != y.cls)
        throw ValidationError("align_pair: feature class mismatch");
    if (!is_binary_class(x.cls))
        throw ValidationError("align_pair: only binary feature classes can be aligned");
    if (x.dims() != y.dims())
        throw ValidationError("align_pair: dimension mismatch");
    AlignedPair out;
    for (std::size_t i = 0; i < x.dims(); ++i) {
        if (is_missing(x.values[i]) || is_missing(y.values[i])) continue;
        out.x.push_back(static_cast<std::uint8_t>(x.values[i]));
        out.y.push_back(static_cast<std::uint8_t>(y.values[i]));
    }
    out.n_obs = out.x.size();
    if (out.n_obs == 0)
        throw ComputeError("incomparable pair: no co-observed dimensions");
    return out;
}

const std::vector<LanguageId>& default_registry() {
    static const std::vector<LanguageId> langs = {
        {"ara"}, {"deu"}, {"eng"}, {"fas"}, {"fra"}, {"hin"}, {"ita"}, {"jpn"},
        {"kor"}, {"nld"}, {"pol"}, {"por"}, {"rus"}, {"spa"}, {"swe"}, {"tur"},
        {"ukr"}};
    return langs;
}

}  // namespace xling
