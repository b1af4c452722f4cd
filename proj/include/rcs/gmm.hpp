#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcs/error.hpp"
#include "rcs/linalg.hpp"
#include "rcs/rng.hpp"

namespace rcs {

/// One mixture component: weight, full-covariance Gaussian, and the number of
/// points hard-assigned to it (floored at 1 so 1/S stays finite downstream).
struct GmmComponent {
    double weight = 0.0;
    Vector mean;
    Matrix cov;
    std::size_t size = 0;
};

struct GmmModel {
    std::vector<GmmComponent> components;
    std::vector<double> loglik_trace;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t num_components() const { return components.size(); }
    [[nodiscard]] double final_loglik() const {
        return loglik_trace.empty() ? -std::numeric_limits<double>::infinity()
                                    : loglik_trace.back();
    }
};

struct EmConfig {
    enum class Init { kMeansPlusPlus, RandomPoints };

    int max_iters = 200;
    double tol = 1e-6; // relative log-likelihood change
    int restarts = 3;
    Init init = Init::kMeansPlusPlus;
};

/// Component-count rule: one component per N_K samples, floored at 1.
inline std::size_t component_count(std::size_t n_c, std::size_t n_k) {
    if (n_k == 0) throw InvalidArgument("component_count: N_K must be positive");
    return std::max<std::size_t>(1, n_c / n_k);
}

namespace detail {

/// Cholesky with the scale-aware ridge; falls back to the diagonal of the
/// covariance when the full matrix is numerically indefinite.
inline CholeskyFactor safe_factor(const Matrix& cov, bool* used_fallback = nullptr) {
    const double eps = default_ridge_eps(cov);
    try {
        return cholesky(ridge_regularize(cov, eps));
    } catch (const NotPositiveDefinite&) {
        Matrix diag(cov.rows(), cov.cols());
        for (std::size_t i = 0; i < cov.rows(); ++i) {
            diag(i, i) = std::max(cov(i, i), 0.0) + std::max(eps, 1e-9);
        }
        if (used_fallback) *used_fallback = true;
        return cholesky(diag);
    }
}

inline std::vector<Vector> kmeanspp_centers(const std::vector<Vector>& data, std::size_t xi,
                                            SeededRng& rng) {
    std::vector<Vector> centers;
    centers.reserve(xi);
    centers.push_back(data[rng.uniform_index(data.size())]);
    std::vector<double> dist2(data.size());
    while (centers.size() < xi) {
        double total = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, squared_distance(data[i], c));
            dist2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_index(data.size());
        }
        centers.push_back(data[pick]);
    }
    return centers;
}

inline std::vector<Vector> random_point_centers(const std::vector<Vector>& data, std::size_t xi,
                                                SeededRng& rng) {
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    std::vector<Vector> centers;
    centers.reserve(xi);
    for (std::size_t i = 0; i < xi; ++i) centers.push_back(data[idx[i]]);
    return centers;
}

/// Maximum-likelihood covariance (divisor N), used for EM initialization.
inline Matrix ml_covariance(const std::vector<Vector>& data, const Vector& mean) {
    const std::size_t d = mean.size();
    Matrix cov(d, d);
    Vector c(d);
    for (const auto& row : data) {
        for (std::size_t j = 0; j < d; ++j) c[j] = row[j] - mean[j];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) cov(i, j) += c[i] * c[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) *= inv;
            cov(j, i) = cov(i, j);
        }
    }
    return cov;
}

struct EmRun {
    std::vector<GmmComponent> components;
    std::vector<double> trace;
    std::vector<std::size_t> hard_counts;
    bool cov_fallback = false;
    bool loglik_regressed = false;
};

inline EmRun run_em(const std::vector<Vector>& data, std::size_t xi, const EmConfig& cfg,
                    SeededRng rng) {
    const std::size_t n = data.size();
    const std::size_t d = data.front().size();

    EmRun run;
    run.components.resize(xi);
    const Vector global_mean = mean_vector(data);
    const Matrix global_cov = ml_covariance(data, global_mean);
    const auto centers = cfg.init == EmConfig::Init::kMeansPlusPlus
                             ? kmeanspp_centers(data, xi, rng)
                             : random_point_centers(data, xi, rng);
    for (std::size_t i = 0; i < xi; ++i) {
        run.components[i].weight = 1.0 / static_cast<double>(xi);
        run.components[i].mean = centers[i];
        run.components[i].cov = global_cov;
    }

    std::vector<std::vector<double>> resp(n, std::vector<double>(xi));
    std::vector<double> logp(xi);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        // E-step (log-space responsibilities).
        std::vector<CholeskyFactor> chols;
        chols.reserve(xi);
        for (const auto& comp : run.components) {
            chols.push_back(safe_factor(comp.cov, &run.cov_fallback));
        }
        double ll = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < xi; ++i) {
                logp[i] = run.components[i].weight > 0.0
                              ? std::log(run.components[i].weight) +
                                    gaussian_log_density(data[j], run.components[i].mean, chols[i])
                              : -std::numeric_limits<double>::infinity();
            }
            const double lse = log_sum_exp(logp);
            ll += lse;
            for (std::size_t i = 0; i < xi; ++i) resp[j][i] = std::exp(logp[i] - lse);
        }

        if (ll < prev_ll - 1e-12) {
            // Ridge-perturbed EM can regress by rounding noise near a fixed
            // point; keep the previous parameters and stop.
            run.loglik_regressed = true;
            break;
        }
        run.trace.push_back(ll);
        const bool converged =
            iter > 0 && std::abs(ll - prev_ll) <= cfg.tol * std::max(1.0, std::abs(ll));
        if (converged) break;
        prev_ll = ll;

        // M-step.
        for (std::size_t i = 0; i < xi; ++i) {
            double mass = 0.0;
            for (std::size_t j = 0; j < n; ++j) mass += resp[j][i];
            if (mass < 1e-12) continue; // dead component: keep previous parameters
            Vector mu(d, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t c = 0; c < d; ++c) mu[c] += resp[j][i] * data[j][c];
            }
            for (double& v : mu) v /= mass;
            Matrix cov(d, d);
            Vector cvec(d);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t c = 0; c < d; ++c) cvec[c] = data[j][c] - mu[c];
                for (std::size_t a = 0; a < d; ++a) {
                    for (std::size_t b = a; b < d; ++b) cov(a, b) += resp[j][i] * cvec[a] * cvec[b];
                }
            }
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = a; b < d; ++b) {
                    cov(a, b) /= mass;
                    cov(b, a) = cov(a, b);
                }
            }
            run.components[i].weight = mass / static_cast<double>(n);
            run.components[i].mean = std::move(mu);
            run.components[i].cov = std::move(cov);
        }
        // Renormalize so dead components do not leak weight off the simplex.
        double wsum = 0.0;
        for (const auto& c : run.components) wsum += c.weight;
        for (auto& c : run.components) c.weight /= wsum;
    }

    // Hard-assignment sizes from the final parameters.
    run.hard_counts.assign(xi, 0);
    std::vector<CholeskyFactor> chols;
    chols.reserve(xi);
    for (const auto& comp : run.components) chols.push_back(safe_factor(comp.cov));
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t best = 0;
        double best_lp = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < xi; ++i) {
            if (run.components[i].weight <= 0.0) continue;
            const double lp = std::log(run.components[i].weight) +
                              gaussian_log_density(data[j], run.components[i].mean, chols[i]);
            if (lp > best_lp) {
                best_lp = lp;
                best = i;
            }
        }
        run.hard_counts[best]++;
    }
    return run;
}

} // namespace detail

/// Fit a GMM with `xi` full-covariance components by EM. Runs
/// `cfg.restarts` seeded restarts and keeps the best final log-likelihood.
/// Component sizes S_i come from hard assignment, floored at 1.
inline GmmModel fit_gmm(const std::vector<Vector>& data, std::size_t xi, const EmConfig& cfg,
                        const SeededRng& rng) {
    if (xi < 1) throw InvalidArgument("fit_gmm: xi must be >= 1");
    if (data.size() < xi) {
        throw InsufficientSamples("fit_gmm: " + std::to_string(data.size()) +
                                  " samples for xi=" + std::to_string(xi));
    }
    if (cfg.max_iters < 1) throw InvalidArgument("fit_gmm: max_iters must be >= 1");
    if (cfg.tol <= 0.0) throw InvalidArgument("fit_gmm: tol must be positive");

    detail::EmRun best;
    bool have_best = false;
    for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
        detail::EmRun run =
            detail::run_em(data, xi, cfg, rng.derive("em-restart", static_cast<std::uint64_t>(r)));
        if (!have_best || (!run.trace.empty() && run.trace.back() > best.trace.back())) {
            best = std::move(run);
            have_best = true;
        }
    }

    GmmModel model;
    model.components = std::move(best.components);
    model.loglik_trace = std::move(best.trace);
    for (std::size_t i = 0; i < model.components.size(); ++i) {
        model.components[i].size = std::max<std::size_t>(1, best.hard_counts[i]);
    }
    if (best.cov_fallback) {
        model.warnings.emplace_back("covariance not positive definite; diagonal fallback used");
    }
    if (best.loglik_regressed) {
        model.warnings.emplace_back("log-likelihood regression detected; stopped early");
    }
    return model;
}

/// Total log-likelihood of `data` under the mixture, via log-sum-exp.
inline double gmm_loglik(const GmmModel& m, const std::vector<Vector>& data) {
    if (data.empty()) return 0.0;
    const std::size_t xi = m.num_components();
    std::vector<CholeskyFactor> chols;
    chols.reserve(xi);
    for (const auto& comp : m.components) {
        if (comp.mean.size() != data.front().size()) {
            throw ShapeMismatch("gmm_loglik: dimension mismatch");
        }
        chols.push_back(detail::safe_factor(comp.cov));
    }
    double total = 0.0;
    std::vector<double> logp(xi);
    for (const auto& x : data) {
        for (std::size_t i = 0; i < xi; ++i) {
            logp[i] = m.components[i].weight > 0.0
                          ? std::log(m.components[i].weight) +
                                gaussian_log_density(x, m.components[i].mean, chols[i])
                          : -std::numeric_limits<double>::infinity();
        }
        total += log_sum_exp(logp);
    }
    return total;
}

/// n draws from component j.
inline std::vector<Vector> sample_component(const GmmModel& m, std::size_t j, std::size_t n,
                                            SeededRng& rng) {
    if (j >= m.num_components()) throw InvalidArgument("sample_component: index out of range");
    const auto& comp = m.components[j];
    const CholeskyFactor chol = detail::safe_factor(comp.cov);
    return sample_gaussian(comp.mean, chol, n, rng);
}

inline nlohmann::json to_json(const GmmModel& m) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : m.components) {
        nlohmann::json cov = nlohmann::json::array();
        for (std::size_t i = 0; i < c.cov.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t k = 0; k < c.cov.cols(); ++k) row.push_back(c.cov(i, k));
            cov.push_back(std::move(row));
        }
        comps.push_back({{"weight", c.weight},
                         {"mean", c.mean},
                         {"covariance", std::move(cov)},
                         {"size", c.size}});
    }
    return {{"components", std::move(comps)},
            {"final_loglik", m.final_loglik()},
            {"iterations", m.loglik_trace.size()},
            {"warnings", m.warnings}};
}

} // namespace rcs
