#pragma once

// Doerfler marking and the solve-estimate-mark-refine loop.

#include "fluxzz/estimators.hpp"
#include "fluxzz/fem.hpp"
#include "fluxzz/mesh.hpp"
#include "fluxzz/problem.hpp"
#include "fluxzz/recovery.hpp"
#include "fluxzz/refine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fluxzz {

enum class EstimatorKind { ZZGradient, ZZFlux, RTEdge, RTElement, BDMEdge, BDMElement, Residual };

inline constexpr std::array<std::pair<EstimatorKind, std::string_view>, 7> kEstimatorNames{{
    {EstimatorKind::ZZGradient, "zz-gradient"},
    {EstimatorKind::ZZFlux, "zz-flux"},
    {EstimatorKind::RTEdge, "rt-edge"},
    {EstimatorKind::RTElement, "rt-element"},
    {EstimatorKind::BDMEdge, "bdm-edge"},
    {EstimatorKind::BDMElement, "bdm-element"},
    {EstimatorKind::Residual, "residual"},
}};

inline std::string to_string(EstimatorKind k) {
    for (const auto &[kind, name] : kEstimatorNames)
        if (kind == k) return std::string(name);
    return "unknown";
}

inline EstimatorKind parse_estimator_kind(std::string_view s) {
    for (const auto &[kind, name] : kEstimatorNames)
        if (name == s) return kind;
    throw std::invalid_argument("unknown estimator '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Estimation

/// Indicators of one kind plus what the loop needs: element values for marking
/// and the reported global value.
struct Estimate {
    IndicatorSet indicators;
    std::vector<double> marking;  // per element
    double value = 0.0;
};

/// Edge kinds report the L2 aggregate of the edge indicators; element kinds report xi.
inline Estimate estimate(EstimatorKind kind, const P1Solution &sol, const CoefficientField &coeff,
                         const NumericalFlux &flux, std::span<const double> gn) {
    const Mesh &mesh = *sol.mesh;
    Estimate out;
    switch (kind) {
    case EstimatorKind::ZZGradient:
    case EstimatorKind::ZZFlux:
        out.indicators = zz_estimator(sol, coeff, kind == EstimatorKind::ZZGradient ? ZZMode::Gradient : ZZMode::FluxWeighted);
        out.marking = out.indicators.element;
        out.value = out.indicators.xi;
        break;
    case EstimatorKind::RTElement:
    case EstimatorKind::BDMElement:
        out.indicators = improved_indicators(kind == EstimatorKind::RTElement ? FluxSpace::RT : FluxSpace::BDM, sol,
                                             coeff, flux, gn);
        out.marking = out.indicators.element;
        out.value = out.indicators.xi;
        break;
    case EstimatorKind::RTEdge:
    case EstimatorKind::BDMEdge: {
        const RecoveryContext ctx{mesh, coeff, flux, gn};
        const FluxSpace space = kind == EstimatorKind::RTEdge ? FluxSpace::RT : FluxSpace::BDM;
        out.indicators.edge.resize(mesh.num_edges());
        for (int f = 0; f < mesh.num_edges(); ++f) out.indicators.edge[f] = edge_indicator(space, ctx, f);
        out.indicators.element = edge_to_element(mesh, out.indicators.edge);
        finalize(out.indicators);
        out.marking = out.indicators.element;
        out.value = out.indicators.xi_hat2;
        break;
    }
    case EstimatorKind::Residual:
        out.indicators = residual_indicators(sol, coeff, flux, gn);
        out.marking = out.indicators.element;
        out.value = out.indicators.xi_hat2;
        break;
    }
    out.indicators.kind = to_string(kind);
    return out;
}

// ---------------------------------------------------------------------------
// Marking

/// Minimal set with sum of marked values^2 >= theta^2 * total, greedy by descending
/// value with ties to the lower id. All-zero indicators give an empty set.
inline std::vector<int> dorfler_mark(std::span<const double> indicators, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0, 1]");
    std::vector<int> order(indicators.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return indicators[a] * indicators[a] > indicators[b] * indicators[b]; });
    // total accumulated in the same order as the greedy sum so that theta = 1 reaches it exactly
    double total = 0.0;
    for (int k : order) total += indicators[k] * indicators[k];
    std::vector<int> marked;
    if (total == 0.0) return marked;
    const double target = theta * theta * total;
    double sum = 0.0;
    for (int k : order) {
        const double v = indicators[k] * indicators[k];
        if (v == 0.0) break;
        marked.push_back(k);
        sum += v;
        if (sum >= target) break;
    }
    return marked;
}

// ---------------------------------------------------------------------------
// Adaptive loop

struct AmrConfig {
    EstimatorKind kind = EstimatorKind::RTElement;
    double theta = 0.5;
    long max_dof = 20000;
    double solver_tol = 1e-12;
    int quad_order = 10;
    int max_steps = 200;
    /// The loop stops when the estimator falls below zero_tol * ||A^{1/2} grad u_T||.
    double zero_tol = 1e-10;
};

struct ConvergenceRecord {
    int step = 0;
    long dof = 0;
    double error = std::numeric_limits<double>::quiet_NaN();
    double estimator = 0.0;
    double effectivity = std::numeric_limits<double>::quiet_NaN();
    double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Everything computed at one step; passed to the observer before marking.
struct StepState {
    int step;
    const P1Solution &solution;
    const CoefficientField &coeff;
    const NumericalFlux &flux;
    std::span<const double> gn;
    const Estimate &estimate;
    const ConvergenceRecord &record;
};

struct AmrResult {
    std::vector<ConvergenceRecord> records;
    std::shared_ptr<const Mesh> mesh;
    Estimate final_estimate;
    P1Solution final_solution;
    bool terminated_by_zero_estimator = false;
};

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

inline constexpr std::size_t kSlopeWindow = 5;

/// Slope of log(error) vs log(dof) over the last kSlopeWindow records.
inline double trailing_slope(std::span<const ConvergenceRecord> records) {
    const std::size_t n = std::min(records.size(), kSlopeWindow);
    std::vector<double> x, y;
    for (std::size_t i = records.size() - n; i < records.size(); ++i) {
        if (!(records[i].error > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        x.push_back(static_cast<double>(records[i].dof));
        y.push_back(records[i].error);
    }
    return log_log_slope(x, y);
}

inline int count_free_vertices(const Mesh &mesh) {
    const auto d = mesh.dirichlet_vertices();
    return static_cast<int>(std::count(d.begin(), d.end(), false));
}

inline AmrResult amr_loop(const ProblemSpec &problem, const AmrConfig &cfg,
                          const std::function<void(const StepState &)> &observer = {}) {
    if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) throw std::invalid_argument("amr_loop: theta must lie in (0, 1)");
    auto mesh = std::make_shared<const Mesh>(problem.mesh);
    if (cfg.max_dof <= count_free_vertices(*mesh))
        throw std::invalid_argument("amr_loop: max_dof must exceed the initial number of degrees of freedom");

    AmrResult result;
    for (int step = 0;; ++step) {
        const CoefficientField coeff(*mesh, problem.coefficients);
        P1Solution sol = solve_problem(problem, mesh, coeff, cfg.solver_tol);
        const NumericalFlux flux = numerical_flux(sol, coeff);
        const auto gn = neumann_values(*mesh, problem.boundary.neumann);
        Estimate est = estimate(cfg.kind, sol, coeff, flux, gn);

        ConvergenceRecord rec;
        rec.step = step;
        rec.dof = count_free_vertices(*mesh);
        rec.estimator = est.value;
        if (problem.exact) {
            rec.error = energy_error(sol, problem.exact->gradient, coeff, cfg.quad_order, problem.exact->singular_points);
            rec.effectivity = rec.error > 0.0 ? rec.estimator / rec.error : std::numeric_limits<double>::quiet_NaN();
        }
        result.records.push_back(rec);
        result.records.back().slope = problem.exact ? trailing_slope(result.records) : rec.slope;
        if (observer) observer(StepState{step, sol, coeff, flux, gn, est, result.records.back()});

        double flux_norm2 = 0.0;
        for (int k = 0; k < mesh->num_triangles(); ++k)
            flux_norm2 += mesh->area(k) * coeff.Ainv(k).form(flux.sigma[k], flux.sigma[k]);
        const bool zero = est.value <= cfg.zero_tol * std::sqrt(flux_norm2);
        const bool done = zero || rec.dof > cfg.max_dof || step + 1 >= cfg.max_steps;
        if (done) {
            result.terminated_by_zero_estimator = zero;
            result.mesh = mesh;
            result.final_estimate = std::move(est);
            result.final_solution = std::move(sol);
            return result;
        }
        const auto marked = dorfler_mark(est.marking, cfg.theta);
        mesh = std::make_shared<const Mesh>(bisect(*mesh, marked));
    }
}

// ---------------------------------------------------------------------------
// Refinement localization

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of an empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

/// Median diameter of elements with an interface edge, over the median diameter of
/// all elements, both restricted to centroids farther than `radius` from the singular point.
inline double refinement_localization_metric(const Mesh &mesh, const Vec2 &singular_point,
                                             const std::vector<bool> &interface_set, double radius = 0.5) {
    std::vector<double> iface, all;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        if (norm(mesh.centroid(k) - singular_point) <= radius) continue;
        const double h = mesh.diameter(k);
        all.push_back(h);
        for (int f : mesh.triangle_edges(k))
            if (interface_set[f]) {
                iface.push_back(h);
                break;
            }
    }
    if (iface.empty() || all.empty()) throw std::invalid_argument("refinement_localization_metric: empty category");
    return median(iface) / median(all);
}

}  // namespace fluxzz
