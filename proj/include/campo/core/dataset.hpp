#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "campo/core/types.hpp"

namespace campo {

/// Training data for the transition density, reduced to (action, displacement)
/// pairs under the location-invariance assumption.
struct Dataset {
    std::vector<DatasetRecord> records;
    Eigen::Index control_dim{0};
    Eigen::Index state_dim{0};

    [[nodiscard]] std::size_t size() const { return records.size(); }
    [[nodiscard]] bool empty() const { return records.empty(); }

    void push_back(DatasetRecord rec) {
        if (records.empty()) {
            control_dim = rec.action.control.size();
            state_dim = rec.delta.size();
        } else if (rec.action.control.size() != control_dim || rec.delta.size() != state_dim) {
            throw std::invalid_argument("dataset record dimension mismatch");
        }
        if (!rec.action.control.allFinite() || !std::isfinite(rec.action.duration) ||
            !rec.delta.allFinite())
            throw std::invalid_argument("dataset record has non-finite entries");
        records.push_back(std::move(rec));
    }

    /// Quantile of the displacement norm over all records, used by the value
    /// upper bound; q in [0,1].
    [[nodiscard]] double displacement_quantile(double q) const {
        if (records.empty()) throw std::invalid_argument("empty dataset");
        std::vector<double> norms(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) norms[i] = records[i].delta.norm();
        std::sort(norms.begin(), norms.end());
        auto idx = static_cast<std::size_t>(q * static_cast<double>(norms.size() - 1));
        return norms[std::min(idx, norms.size() - 1)];
    }
};

inline std::string dataset_csv_header(Eigen::Index control_dim, Eigen::Index state_dim) {
    std::ostringstream os;
    for (Eigen::Index i = 0; i < control_dim; ++i) os << "u_" << (i + 1) << ",";
    os << "dt";
    for (Eigen::Index i = 0; i < state_dim; ++i) os << ",ds_" << (i + 1);
    return os.str();
}

inline void save_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out << dataset_csv_header(data.control_dim, data.state_dim) << "\n";
    char buf[32];
    for (const auto& rec : data.records) {
        for (Eigen::Index i = 0; i < rec.action.control.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", rec.action.control[i]);
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", rec.action.duration);
        out << buf;
        for (Eigen::Index i = 0; i < rec.delta.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", rec.delta[i]);
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for dataset file: " + path);
}

inline Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty dataset file: " + path);

    // Infer dimensions from the header: u_1,...,u_k,dt,ds_1,...,ds_m.
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
    }
    Eigen::Index control_dim = 0, state_dim = 0;
    std::size_t pos = 0;
    while (pos < cols.size() && cols[pos] == "u_" + std::to_string(pos + 1)) {
        ++control_dim;
        ++pos;
    }
    if (pos >= cols.size() || cols[pos] != "dt")
        throw std::runtime_error("dataset header malformed (expected dt column): " + path);
    ++pos;
    while (pos < cols.size() && cols[pos] == "ds_" + std::to_string(state_dim + 1)) {
        ++state_dim;
        ++pos;
    }
    if (pos != cols.size() || control_dim == 0 || state_dim == 0)
        throw std::runtime_error("dataset header malformed: " + path);

    Dataset data;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (static_cast<Eigen::Index>(vals.size()) != control_dim + 1 + state_dim)
            throw std::runtime_error("dataset row " + std::to_string(lineno) +
                                     " has wrong column count: " + path);
        DatasetRecord rec;
        rec.action.control = Eigen::Map<Vec>(vals.data(), control_dim);
        rec.action.duration = vals[static_cast<std::size_t>(control_dim)];
        rec.delta = Eigen::Map<Vec>(vals.data() + control_dim + 1, state_dim);
        data.push_back(std::move(rec));
    }
    if (data.empty()) throw std::runtime_error("dataset has no records: " + path);
    return data;
}

}  // namespace campo
