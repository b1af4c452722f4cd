#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rcs/error.hpp"
#include "rcs/linalg.hpp"
#include "rcs/rng.hpp"

namespace rcs {

/// Rows of real-valued feature vectors with dense integer class labels.
/// Labels are re-encoded 0..K-1 in first-seen order; `label_names` maps a
/// dense label back to the original string for output.
struct LabeledDataset {
    std::vector<Vector> features;
    std::vector<int> labels;
    std::vector<std::string> label_names;
    std::vector<std::string> feature_names;

    [[nodiscard]] std::size_t size() const { return features.size(); }
    [[nodiscard]] std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
    [[nodiscard]] int num_classes() const { return static_cast<int>(label_names.size()); }

    [[nodiscard]] std::vector<Vector> rows_of_class(int label) const {
        std::vector<Vector> out;
        for (std::size_t i = 0; i < size(); ++i) {
            if (labels[i] == label) out.push_back(features[i]);
        }
        return out;
    }
};

/// Per-class sample counts sorted descending (ties by original label name
/// ascending, for determinism). N1 = largest, NK = smallest.
struct ClassCounts {
    std::vector<std::pair<int, std::size_t>> ordered; // (dense label, count)

    [[nodiscard]] std::size_t n1() const { return ordered.front().second; }
    [[nodiscard]] std::size_t nk() const { return ordered.back().second; }
    [[nodiscard]] std::size_t num_classes() const { return ordered.size(); }

    [[nodiscard]] std::size_t count_of(int label) const {
        for (const auto& [l, c] : ordered) {
            if (l == label) return c;
        }
        throw AbsentClass("count_of: label not present");
    }
};

/// Stratified fold assignment: assignments[i] in [0, k).
struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;
};

/// Per-feature z-score parameters fitted on training rows only.
struct Standardizer {
    Vector mean;
    Vector stddev; // floored at 1e-12 so constant features map to 0

    [[nodiscard]] Vector transform(const Vector& x) const {
        if (x.size() != mean.size()) throw ShapeMismatch("Standardizer: dimension mismatch");
        Vector out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / stddev[j];
        return out;
    }

    [[nodiscard]] Vector inverse_transform(const Vector& z) const {
        if (z.size() != mean.size()) throw ShapeMismatch("Standardizer: dimension mismatch");
        Vector out(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] * stddev[j] + mean[j];
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

} // namespace detail

/// Load a labeled dataset from a comma-separated file. The label column is
/// chosen by header name (when a header is present) or by zero-based index.
inline LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                               bool has_header) {
    std::ifstream in(path);
    if (!in) throw Error("load_csv: cannot open " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!detail::trim(line).empty()) lines.push_back(line);
    }
    if (lines.empty()) throw EmptyInput("load_csv: " + path + " is empty");

    std::vector<std::string> header;
    std::size_t first_data_row = 0;
    if (has_header) {
        header = detail::split_csv_line(lines[0]);
        for (auto& h : header) h = detail::trim(h);
        first_data_row = 1;
        if (lines.size() == 1) throw EmptyInput("load_csv: no data rows in " + path);
    }

    const std::size_t ncols = detail::split_csv_line(lines[first_data_row]).size();
    if (ncols < 2) throw ShapeMismatch("load_csv: need at least one feature and a label column");

    std::size_t label_idx = ncols; // sentinel
    if (has_header) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == label_column) {
                label_idx = j;
                break;
            }
        }
    }
    if (label_idx == ncols) {
        // Fall back to a zero-based column index.
        try {
            const long v = std::stol(label_column);
            if (v >= 0 && static_cast<std::size_t>(v) < ncols) label_idx = static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    if (label_idx == ncols) {
        throw InvalidArgument("load_csv: label column '" + label_column + "' not found");
    }

    LabeledDataset ds;
    if (has_header) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j != label_idx) ds.feature_names.push_back(header[j]);
        }
    } else {
        for (std::size_t j = 0; j < ncols; ++j) {
            if (j != label_idx) ds.feature_names.push_back("f" + std::to_string(j));
        }
    }

    std::map<std::string, int> label_map;
    for (std::size_t r = first_data_row; r < lines.size(); ++r) {
        const auto cells = detail::split_csv_line(lines[r]);
        if (cells.size() != ncols) {
            throw ShapeMismatch("load_csv: row " + std::to_string(r) + " has " +
                                std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(ncols));
        }
        Vector row;
        row.reserve(ncols - 1);
        for (std::size_t c = 0; c < ncols; ++c) {
            if (c == label_idx) continue;
            double v;
            if (!detail::parse_double(cells[c], v)) {
                throw ParseError("load_csv: cannot parse '" + detail::trim(cells[c]) + "'", r, c);
            }
            row.push_back(v);
        }
        const std::string name = detail::trim(cells[label_idx]);
        auto it = label_map.find(name);
        if (it == label_map.end()) {
            it = label_map.emplace(name, static_cast<int>(ds.label_names.size())).first;
            ds.label_names.push_back(name);
        }
        ds.features.push_back(std::move(row));
        ds.labels.push_back(it->second);
    }
    return ds;
}

/// Write a dataset using the load_csv schema plus a trailing `synthetic`
/// column (0 = original row, 1 = generated row).
inline void save_csv(const std::string& path, const LabeledDataset& ds,
                     const std::vector<bool>& synthetic) {
    if (synthetic.size() != ds.size()) throw ShapeMismatch("save_csv: flag length mismatch");
    std::ofstream out(path);
    if (!out) throw Error("save_csv: cannot open " + path);
    out.precision(17);
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j) out << ds.feature_names[j] << ',';
    out << "class,synthetic\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features[i]) out << v << ',';
        out << ds.label_names[ds.labels[i]] << ',' << (synthetic[i] ? 1 : 0) << '\n';
    }
}

/// Per-class counts, descending; ties broken by original label ascending.
inline ClassCounts class_counts(const LabeledDataset& ds) {
    if (ds.size() == 0) throw EmptyInput("class_counts: empty dataset");
    std::vector<std::size_t> counts(ds.label_names.size(), 0);
    for (int l : ds.labels) counts[static_cast<std::size_t>(l)]++;
    ClassCounts cc;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] > 0) cc.ordered.emplace_back(static_cast<int>(l), counts[l]);
    }
    std::sort(cc.ordered.begin(), cc.ordered.end(), [&ds](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return ds.label_names[a.first] < ds.label_names[b.first];
    });
    return cc;
}

/// Stratified k-fold assignment: seeded per-class shuffle, then round-robin,
/// so per-class fold sizes differ by at most one. Deterministic per seed.
inline FoldPlan stratified_kfold(const LabeledDataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw InvalidArgument("stratified_kfold: k must be >= 2");
    const ClassCounts cc = class_counts(ds);
    for (const auto& [label, count] : cc.ordered) {
        if (count < static_cast<std::size_t>(k)) {
            throw InsufficientSamples("stratified_kfold: class '" + ds.label_names[label] +
                                      "' has " + std::to_string(count) + " samples, need " +
                                      std::to_string(k));
        }
    }
    FoldPlan plan;
    plan.k = k;
    plan.assignments.assign(ds.size(), -1);
    SeededRng master(seed);
    for (int label = 0; label < ds.num_classes(); ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.labels[i] == label) idx.push_back(i);
        }
        SeededRng stream = master.derive("fold-shuffle", static_cast<std::uint64_t>(label));
        stream.shuffle(idx);
        for (std::size_t pos = 0; pos < idx.size(); ++pos) {
            plan.assignments[idx[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
        }
    }
    return plan;
}

/// Rows of `ds` assigned to (or excluded from) fold `fold`.
inline LabeledDataset select_fold(const LabeledDataset& ds, const FoldPlan& plan, int fold,
                                  bool keep_fold) {
    LabeledDataset out;
    out.label_names = ds.label_names;
    out.feature_names = ds.feature_names;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if ((plan.assignments[i] == fold) == keep_fold) {
            out.features.push_back(ds.features[i]);
            out.labels.push_back(ds.labels[i]);
        }
    }
    return out;
}

/// Fit a z-score standardizer on training rows (population divisor N) and
/// return the transformed copy alongside it.
inline std::pair<Standardizer, LabeledDataset> standardize_fit_transform(
    const LabeledDataset& train) {
    if (train.size() == 0) throw EmptyInput("standardize_fit_transform: empty dataset");
    const std::size_t d = train.dim();
    Standardizer s;
    s.mean = mean_vector(train.features);
    s.stddev.assign(d, 0.0);
    for (const auto& row : train.features) {
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - s.mean[j];
            s.stddev[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        s.stddev[j] = std::max(std::sqrt(s.stddev[j] / static_cast<double>(train.size())), 1e-12);
    }
    LabeledDataset out = train;
    for (auto& row : out.features) row = s.transform(row);
    return {std::move(s), std::move(out)};
}

inline LabeledDataset standardize_apply(const Standardizer& s, const LabeledDataset& ds) {
    LabeledDataset out = ds;
    for (auto& row : out.features) row = s.transform(row);
    return out;
}

} // namespace rcs
