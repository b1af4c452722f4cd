#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rcs/dataset.hpp"
#include "rcs/error.hpp"
#include "rcs/gmm.hpp"
#include "rcs/linalg.hpp"
#include "rcs/rng.hpp"

namespace rcs {

/// Class roles induced by the threshold cardinality zeta = N1 / eta.
/// Classes tied with N1 (other than the first-ordered one) count as
/// intermediate with nothing to generate.
struct ClassPartition {
    int majority = -1;
    std::vector<int> intermediate; // descending-count order
    std::vector<int> minority;     // descending-count order
    double zeta = 0.0;
};

/// Flattened per-component statistics from the majority class and all
/// intermediate classes; the substrate minority samples are calibrated from.
struct PoolEntry {
    Vector mean;
    Matrix cov;
    std::size_t size = 0;
    int source_class = -1;
};

struct ComponentPool {
    std::vector<PoolEntry> entries;

    [[nodiscard]] std::size_t size() const { return entries.size(); }
};

/// Estimated Gaussian for one minority sample: a convex combination of the
/// k nearest pool components and the sample itself.
struct CalibratedGaussian {
    Vector mean;
    Matrix cov;
    std::vector<double> coefficients; // k neighbor weights, then the self-weight
    std::vector<std::size_t> neighbor_indices;
    bool renormalized = false;

    [[nodiscard]] double self_weight() const { return coefficients.back(); }
    [[nodiscard]] double neighbor_weight_sum() const {
        return std::accumulate(coefficients.begin(), coefficients.end() - 1, 0.0);
    }
};

/// zeta = N1 / eta. eta below 1 would exclude nothing and is rejected.
inline double compute_threshold(std::size_t n1, double eta) {
    if (eta < 1.0) throw InvalidArgument("compute_threshold: eta must be >= 1");
    if (n1 < 1) throw InvalidArgument("compute_threshold: N1 must be >= 1");
    return static_cast<double>(n1) / eta;
}

inline ClassPartition partition_classes(const ClassCounts& counts, double zeta) {
    if (counts.ordered.empty()) throw EmptyInput("partition_classes: no classes");
    ClassPartition part;
    part.zeta = zeta;
    part.majority = counts.ordered.front().first;
    for (std::size_t i = 1; i < counts.ordered.size(); ++i) {
        const auto& [label, count] = counts.ordered[i];
        if (static_cast<double>(count) >= zeta) {
            part.intermediate.push_back(label);
        } else {
            part.minority.push_back(label);
        }
    }
    return part;
}

/// Concatenate component statistics: majority components first, then each
/// intermediate model in the given (descending-count) order. Pool index is
/// the tie-breaking key downstream.
inline ComponentPool build_component_pool(
    const GmmModel& majority_gmm,
    const std::vector<std::pair<int, const GmmModel*>>& intermediate_gmms, int majority_label) {
    ComponentPool pool;
    for (const auto& c : majority_gmm.components) {
        pool.entries.push_back({c.mean, c.cov, c.size, majority_label});
    }
    for (const auto& [label, model] : intermediate_gmms) {
        for (const auto& c : model->components) {
            pool.entries.push_back({c.mean, c.cov, c.size, label});
        }
    }
    return pool;
}

/// w_i = 1 / S_i, aligned with pool order.
inline std::vector<double> component_weights(const ComponentPool& pool) {
    std::vector<double> w;
    w.reserve(pool.size());
    for (const auto& e : pool.entries) {
        if (e.size == 0) throw InvalidArgument("component_weights: component size must be >= 1");
        w.push_back(1.0 / static_cast<double>(e.size));
    }
    return w;
}

// When the k neighbor weights carry half or more of the total mass the
// sample's own weight no longer dominates, which breaks the closer-to-l
// guarantee; scale them down to just under half so the self-weight stays
// strictly larger.
inline constexpr double kNeighborMassCap = 0.5 - 1e-9;

/// Estimate (mean, cov) for one minority sample from its k nearest pool
/// components (Euclidean distance between the sample and component means,
/// ties by pool index) and the class covariance sigma_m.
inline CalibratedGaussian calibrate_point(const Vector& l, const ComponentPool& pool,
                                          const std::vector<double>& weights, std::size_t k,
                                          const Matrix& sigma_m) {
    if (k < 1 || k > pool.size()) {
        throw InvalidArgument("calibrate_point: k must be in [1, pool size]");
    }
    if (weights.size() != pool.size()) {
        throw ShapeMismatch("calibrate_point: weights/pool size mismatch");
    }
    const std::size_t d = l.size();

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist2(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) {
        dist2[j] = squared_distance(pool.entries[j].mean, l);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&dist2](std::size_t a, std::size_t b) { return dist2[a] < dist2[b]; });
    order.resize(k);

    CalibratedGaussian out;
    out.neighbor_indices = order;
    double mass = 0.0;
    for (std::size_t j : order) mass += weights[j];

    double scale = 1.0;
    if (mass >= 0.5) {
        scale = kNeighborMassCap / mass;
        out.renormalized = true;
    }

    out.mean.assign(d, 0.0);
    out.cov = Matrix(d, d);
    out.coefficients.reserve(k + 1);
    double neighbor_sum = 0.0;
    for (std::size_t j : order) {
        const double w = weights[j] * scale;
        out.coefficients.push_back(w);
        neighbor_sum += w;
        for (std::size_t c = 0; c < d; ++c) out.mean[c] += w * pool.entries[j].mean[c];
        const Matrix& cov = pool.entries[j].cov;
        if (cov.rows() != d) throw ShapeMismatch("calibrate_point: pool covariance dimension");
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) out.cov(a, b) += w * cov(a, b);
        }
    }
    const double self_w = 1.0 - neighbor_sum;
    out.coefficients.push_back(self_w);
    for (std::size_t c = 0; c < d; ++c) out.mean[c] += self_w * l[c];
    if (sigma_m.rows() != d || sigma_m.cols() != d) {
        throw ShapeMismatch("calibrate_point: sigma_m dimension");
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) out.cov(a, b) += self_w * sigma_m(a, b);
    }
    return out;
}

/// Intermediate-class generation: n_i draws spread over the components,
/// floor division with the remainder front-loaded in component order.
inline std::vector<Vector> oversample_intermediate(const GmmModel& gmm, std::size_t n_i,
                                                   SeededRng& rng) {
    std::vector<Vector> out;
    out.reserve(n_i);
    const std::size_t xi = gmm.num_components();
    const std::size_t base = n_i / xi;
    const std::size_t rem = n_i % xi;
    for (std::size_t j = 0; j < xi; ++j) {
        const std::size_t take = base + (j < rem ? 1 : 0);
        auto draws = sample_component(gmm, j, take, rng);
        std::move(draws.begin(), draws.end(), std::back_inserter(out));
    }
    return out;
}

/// Class covariance for calibration; epsilon-identity when the class has a
/// single sample and no covariance exists.
inline Matrix minority_sigma(const std::vector<Vector>& class_data) {
    if (class_data.empty()) throw EmptyInput("minority_sigma: empty class");
    const std::size_t d = class_data.front().size();
    if (class_data.size() < 2) {
        Matrix eps(d, d);
        for (std::size_t i = 0; i < d; ++i) eps(i, i) = 1e-9;
        return eps;
    }
    return covariance_matrix(class_data, mean_vector(class_data));
}

/// Minority-class generation: each sample gets its own calibrated Gaussian;
/// n_i draws spread over the samples, remainder front-loaded in row order.
inline std::vector<Vector> oversample_minority(const std::vector<Vector>& class_data,
                                               const ComponentPool& pool,
                                               const std::vector<double>& weights, std::size_t k,
                                               std::size_t n_i, SeededRng& rng,
                                               std::vector<std::string>* warnings = nullptr) {
    if (class_data.empty()) throw EmptyInput("oversample_minority: empty class");
    const Matrix sigma_m = minority_sigma(class_data);
    const std::size_t n_c = class_data.size();
    const std::size_t base = n_i / n_c;
    const std::size_t rem = n_i % n_c;

    std::vector<Vector> out;
    out.reserve(n_i);
    bool renorm_warned = false;
    for (std::size_t e = 0; e < n_c; ++e) {
        const std::size_t take = base + (e < rem ? 1 : 0);
        if (take == 0) continue;
        const CalibratedGaussian cal = calibrate_point(class_data[e], pool, weights, k, sigma_m);
        if (cal.renormalized && warnings && !renorm_warned) {
            warnings->emplace_back("neighbor weight mass >= 0.5; renormalized to keep the "
                                   "self-weight dominant");
            renorm_warned = true;
        }
        const CholeskyFactor chol = detail::safe_factor(cal.cov);
        auto draws = sample_gaussian(cal.mean, chol, take, rng);
        std::move(draws.begin(), draws.end(), std::back_inserter(out));
    }
    return out;
}

struct ClassReport {
    std::string label;
    std::size_t count = 0;
    std::size_t xi = 0; // planned component count; 0 for minority classes
    std::size_t n_generated = 0;
    std::string role;
};

struct RunReport {
    double zeta = 0.0;
    double eta = 0.0;
    std::size_t k_requested = 0;
    std::size_t k_used = 0;
    std::uint64_t seed = 0;
    std::string majority;
    std::vector<std::string> intermediate;
    std::vector<std::string> minority;
    std::size_t pool_size = 0;
    std::vector<ClassReport> per_class;
    std::vector<std::string> warnings;
};

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& c : r.per_class) {
        per_class.push_back({{"label", c.label},
                             {"N", c.count},
                             {"xi", c.xi},
                             {"n_generated", c.n_generated},
                             {"role", c.role}});
    }
    return {{"zeta", r.zeta},
            {"eta", r.eta},
            {"k", r.k_requested},
            {"k_used", r.k_used},
            {"seed", r.seed},
            {"partition",
             {{"majority", r.majority},
              {"intermediate", r.intermediate},
              {"minority", r.minority}}},
            {"pool_size", r.pool_size},
            {"per_class", std::move(per_class)},
            {"warnings", r.warnings}};
}

struct RcsResult {
    LabeledDataset data;
    std::vector<bool> synthetic;
    RunReport report;
};

/// Full oversampler: every class is brought up to exactly N1 rows.
/// Intermediate classes draw from their own GMM components; minority classes
/// draw from per-sample calibrated Gaussians over the component pool.
/// All randomness derives from (seed, class label), so per-class work can be
/// parallelized without changing the output.
inline RcsResult rcs_oversample(const LabeledDataset& ds, double eta, std::size_t k,
                                const EmConfig& em_cfg, std::uint64_t seed) {
    if (ds.num_classes() < 2) throw InvalidArgument("rcs_oversample: need at least 2 classes");
    if (k < 1) throw InvalidArgument("rcs_oversample: k must be >= 1");

    const ClassCounts counts = class_counts(ds);
    const std::size_t n1 = counts.n1();
    const std::size_t nk = counts.nk();

    RcsResult res;
    res.report.eta = eta;
    res.report.zeta = compute_threshold(n1, eta);
    res.report.k_requested = k;
    res.report.seed = seed;

    const ClassPartition part = partition_classes(counts, res.report.zeta);
    res.report.majority = ds.label_names[part.majority];
    for (int c : part.intermediate) res.report.intermediate.push_back(ds.label_names[c]);
    for (int c : part.minority) res.report.minority.push_back(ds.label_names[c]);

    SeededRng master(seed);

    // Fit GMMs for the classes that need them: intermediates with samples to
    // generate, plus the majority when any minority class must be calibrated.
    std::map<int, GmmModel> gmms;
    std::map<int, std::vector<Vector>> class_rows;
    for (const auto& [label, count] : counts.ordered) class_rows[label] = ds.rows_of_class(label);

    const bool need_pool = !part.minority.empty();
    if (need_pool) {
        const std::size_t xi = component_count(n1, nk);
        gmms.emplace(part.majority,
                     fit_gmm(class_rows[part.majority], xi, em_cfg,
                             master.derive("gmm", static_cast<std::uint64_t>(part.majority))));
    }
    for (int label : part.intermediate) {
        const std::size_t count = counts.count_of(label);
        if (count == n1) continue; // tied with the majority: nothing to do
        const std::size_t xi = component_count(count, nk);
        gmms.emplace(label, fit_gmm(class_rows[label], xi, em_cfg,
                                    master.derive("gmm", static_cast<std::uint64_t>(label))));
    }
    for (const auto& [label, model] : gmms) {
        for (const auto& w : model.warnings) {
            res.report.warnings.push_back("class '" + ds.label_names[label] + "' gmm: " + w);
        }
    }

    ComponentPool pool;
    std::vector<double> weights;
    std::size_t k_used = k;
    if (need_pool) {
        std::vector<std::pair<int, const GmmModel*>> inter;
        for (int label : part.intermediate) {
            auto it = gmms.find(label);
            if (it != gmms.end()) inter.emplace_back(label, &it->second);
        }
        pool = build_component_pool(gmms.at(part.majority), inter, part.majority);
        weights = component_weights(pool);
        if (pool.size() < k) {
            k_used = pool.size();
            res.report.warnings.push_back("k=" + std::to_string(k) + " exceeds pool size " +
                                          std::to_string(pool.size()) + "; clamped");
        }
    }
    res.report.k_used = k_used;
    res.report.pool_size = pool.size();

    // Originals first, in input order; synthetics appended per class in
    // descending-count order.
    res.data.label_names = ds.label_names;
    res.data.feature_names = ds.feature_names;
    res.data.features = ds.features;
    res.data.labels = ds.labels;
    res.synthetic.assign(ds.size(), false);

    for (const auto& [label, count] : counts.ordered) {
        ClassReport cr;
        cr.label = ds.label_names[label];
        cr.count = count;
        const std::size_t n_i = n1 - count;
        std::vector<Vector> synth;
        if (label == part.majority) {
            cr.role = "majority";
            cr.xi = component_count(count, nk);
        } else if (std::find(part.intermediate.begin(), part.intermediate.end(), label) !=
                   part.intermediate.end()) {
            cr.role = "intermediate";
            cr.xi = component_count(count, nk);
            if (n_i > 0) {
                SeededRng gen = master.derive("gen", static_cast<std::uint64_t>(label));
                synth = oversample_intermediate(gmms.at(label), n_i, gen);
            }
        } else {
            cr.role = "minority";
            if (n_i > 0) {
                SeededRng gen = master.derive("gen", static_cast<std::uint64_t>(label));
                synth = oversample_minority(class_rows[label], pool, weights, k_used, n_i, gen,
                                            &res.report.warnings);
            }
        }
        cr.n_generated = synth.size();
        for (auto& row : synth) {
            res.data.features.push_back(std::move(row));
            res.data.labels.push_back(label);
            res.synthetic.push_back(true);
        }
        res.report.per_class.push_back(std::move(cr));
    }
    return res;
}

} // namespace rcs
