#pragma once

// A posteriori error indicators:
//   - classic ZZ (nodal averaging of the gradient) and its flux-weighted variant,
//   - improved ZZ edge and element indicators from RT / BDM flux recovery,
//   - the residual edge-jump indicator eta_F and the data oscillation term.

#include "fluxzz/basis.hpp"
#include "fluxzz/fem.hpp"
#include "fluxzz/mesh.hpp"
#include "fluxzz/quadrature.hpp"
#include "fluxzz/recovery.hpp"

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace fluxzz {

struct IndicatorSet {
    std::string kind;
    std::vector<double> edge;     // xi_F (empty for element-only estimators)
    std::vector<double> element;  // xi_K
    double xi = 0.0;              // (sum xi_K^2)^{1/2}
    double xi_hat = 0.0;          // sum xi_F
    double xi_hat2 = 0.0;         // (sum xi_F^2)^{1/2}
};

inline void finalize(IndicatorSet &s) {
    double e2 = 0.0, fs = 0.0, f2 = 0.0;
    for (double v : s.element) e2 += v * v;
    for (double v : s.edge) {
        fs += v;
        f2 += v * v;
    }
    s.xi = std::sqrt(e2);
    s.xi_hat = fs;
    s.xi_hat2 = std::sqrt(f2);
}

// ---------------------------------------------------------------------------
// ZZ recovery

/// Measure-weighted average of values over a patch: sum(m_i v_i) / sum(m_i).
/// Generic over the scalar type so that exact arithmetic can be used in checks.
template <typename Measure, typename Value>
Value patch_average(std::span<const std::pair<Measure, Value>> patch) {
    Measure total{};
    Value acc{};
    for (const auto &[m, v] : patch) {
        total += m;
        acc += m * v;
    }
    return acc / total;
}

/// Nodal values G(tau)(z) = (1/|omega_z|) integral_{omega_z} tau for a piecewise constant field.
inline std::vector<Vec2> zz_recover(const Mesh &mesh, std::span<const Vec2> field) {
    const auto patches = vertex_patches(mesh);
    std::vector<Vec2> out(mesh.num_vertices());
    std::vector<std::pair<double, Vec2>> buf;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        buf.clear();
        for (int k : patches[v]) buf.emplace_back(mesh.area(k), field[k]);
        out[v] = patch_average<double, Vec2>(buf);
    }
    return out;
}

enum class ZZMode { Gradient, FluxWeighted };

/// ||G(tau) - tau||_K for tau = grad u_T, or the flux-weighted variant
/// ||alpha^{1/2} grad u_T - alpha^{-1/2} G(alpha grad u_T)||_K (scalar coefficients only).
inline IndicatorSet zz_estimator(const P1Solution &sol, const CoefficientField &coeff, ZZMode mode) {
    const Mesh &mesh = *sol.mesh;
    const int nt = mesh.num_triangles();
    std::vector<Vec2> grad(nt), field(nt);
    std::vector<double> alpha(nt, 1.0);
    for (int k = 0; k < nt; ++k) {
        grad[k] = sol.gradient(k);
        if (mode == ZZMode::FluxWeighted) {
            if (!coeff.A(k).is_scalar())
                throw std::invalid_argument("flux-weighted ZZ requires a scalar coefficient A = alpha I");
            alpha[k] = coeff.A(k).xx;
        }
        field[k] = alpha[k] * grad[k];
    }
    const auto nodal = zz_recover(mesh, field);
    const auto rule = triangle_rule(2);
    IndicatorSet out;
    out.kind = mode == ZZMode::Gradient ? "zz-gradient" : "zz-flux";
    out.element.resize(nt);
    for (int k = 0; k < nt; ++k) {
        const auto &t = mesh.triangle(k).v;
        const double sa = std::sqrt(alpha[k]);
        double acc = 0.0;
        for (const auto &q : rule) {
            const Vec2 g = q.bary[0] * nodal[t[0]] + q.bary[1] * nodal[t[1]] + q.bary[2] * nodal[t[2]];
            const Vec2 d = sa * grad[k] - g / sa;
            acc += q.weight * dot(d, d);
        }
        out.element[k] = std::sqrt(acc * mesh.area(k));
    }
    finalize(out);
    return out;
}

// ---------------------------------------------------------------------------
// Improved ZZ edge indicators

/// Inputs shared by the edge and element indicator computations.
struct RecoveryContext {
    const Mesh &mesh;
    const CoefficientField &coeff;
    const NumericalFlux &flux;
    std::span<const double> gn;  // g_N per edge
};

/// Interior-edge RT value |jump| |F| ((1-a)^2 gamma^- + a^2 gamma^+)^{1/2}.
inline double rt_edge_formula(double jump, double length, const GammaPair &g) {
    const double a = rt_weight(g);
    const double w = (1.0 - a) * (1.0 - a) * g.minus + a * a * g.plus;
    return std::abs(jump) * length * std::sqrt(w);
}

/// Interior-edge BDM value |jump| |F| w_F^{1/2}.
inline double bdm_edge_formula(double jump, double length, const BetaPair &beta) {
    const auto b = bdm_weights(beta);
    const double ms = 1.0 - b.s, me = 1.0 - b.e;
    const double w = ms * ms * beta.minus.ss + 2.0 * ms * me * beta.minus.se + me * me * beta.minus.ee +
                     b.s * b.s * beta.plus.ss + 2.0 * b.s * b.e * beta.plus.se + b.e * b.e * beta.plus.ee;
    return std::abs(jump) * length * std::sqrt(std::max(w, 0.0));
}

inline double edge_indicator_rt(const RecoveryContext &ctx, int f) {
    const auto &e = ctx.mesh.edge(f);
    switch (e.kind) {
    case EdgeKind::Dirichlet:
        return 0.0;
    case EdgeKind::Neumann:
        return std::abs(ctx.flux.minus[f] - ctx.gn[f]) * e.length *
               std::sqrt(gamma_on(ctx.mesh, ctx.coeff, e.k_minus, f));
    case EdgeKind::Interior:
        break;
    }
    return rt_edge_formula(ctx.flux.minus[f] - ctx.flux.plus[f], e.length, gamma_coeffs(ctx.mesh, ctx.coeff, f));
}

inline double edge_indicator_bdm(const RecoveryContext &ctx, int f) {
    const auto &e = ctx.mesh.edge(f);
    switch (e.kind) {
    case EdgeKind::Dirichlet:
        return 0.0;
    case EdgeKind::Neumann: {
        const auto b = beta_on(ctx.mesh, ctx.coeff, e.k_minus, f);
        return std::abs(ctx.flux.minus[f] - ctx.gn[f]) * e.length * std::sqrt(b.ss + 2.0 * b.se + b.ee);
    }
    case EdgeKind::Interior:
        break;
    }
    return bdm_edge_formula(ctx.flux.minus[f] - ctx.flux.plus[f], e.length, beta_coeffs(ctx.mesh, ctx.coeff, f));
}

inline double edge_indicator(FluxSpace space, const RecoveryContext &ctx, int f) {
    return space == FluxSpace::RT ? edge_indicator_rt(ctx, f) : edge_indicator_bdm(ctx, f);
}

// ---------------------------------------------------------------------------
// Element indicators xi_K = ||A^{-1/2}(sigma^ - sigma~)||_K

enum class ElementMethod {
    ThreeTerm,   // (A^{-1}s,s) + 2(s, grad u) + (A grad u, grad u) via the R/T/S or B/D/M/L sums
    Difference,  // closed-form mass matrix applied to dof differences; free of cancellation
    Quadrature,  // order-4 quadrature of the pointwise difference
};

namespace detail {

/// (A grad u, grad u)_K = 1/(4|K|) sum_FF' u(x_F) u(x_F') sgn sgn |F||F'| n_F'^T A n_F.
inline double energy_term(const Mesh &mesh, const CoefficientField &coeff, const P1Solution &sol, int k) {
    const auto &te = mesh.triangle_edges(k);
    const auto &tv = mesh.triangle(k).v;
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto &fi = mesh.edge(te[i]);
        for (int j = 0; j < 3; ++j) {
            const auto &fj = mesh.edge(te[j]);
            const double s = coeff.A(k).form(fj.n, fi.n);
            acc += sol.u[tv[i]] * sol.u[tv[j]] * mesh.sign(k, te[i]) * mesh.sign(k, te[j]) * fi.length * fj.length * s;
        }
    }
    return acc / (4.0 * mesh.area(k));
}

/// RT terms: (A^{-1}s, s)_K and (s, grad u)_K from R_FF' and T_FF'.
inline std::pair<double, double> rt_terms(const Mesh &mesh, const CoefficientField &coeff, const P1Solution &sol,
                                          std::span<const double> dof, int k) {
    const auto c = mesh.corners(k);
    const auto &te = mesh.triangle_edges(k);
    const auto &tv = mesh.triangle(k).v;
    const Sym2 &ai = coeff.Ainv(k);
    const Vec2 sum = c[0] + c[1] + c[2];
    double mass = 0.0, mixed = 0.0;
    for (int i = 0; i < 3; ++i) {       // F
        for (int j = 0; j < 3; ++j) {   // F'
            double r = ai.form(sum - 3.0 * c[j], sum - 3.0 * c[i]);
            for (int l = 0; l < 3; ++l) r += ai.form(c[l] - c[j], c[l] - c[i]);
            const double t = dot(mesh.edge(te[j]).n, sum - 3.0 * c[i]);
            const double ss = mesh.sign(k, te[i]) * mesh.sign(k, te[j]) * mesh.edge(te[i]).length *
                              mesh.edge(te[j]).length;
            mass += ss * dof[i] * dof[j] * r;
            mixed += ss * dof[i] * sol.u[tv[j]] * t;
        }
    }
    return {mass / (48.0 * mesh.area(k)), -mixed / (12.0 * mesh.area(k))};
}

/// BDM terms: (A^{-1}s, s)_K from B, D, M and (s, grad u)_K from L.
inline std::pair<double, double> bdm_terms(const Mesh &mesh, const CoefficientField &coeff, const P1Solution &sol,
                                           std::span<const std::array<double, 2>> dof, int k) {
    const auto &te = mesh.triangle_edges(k);
    const auto &tv = mesh.triangle(k).v;
    const Sym2 &ai = coeff.Ainv(k);
    const double area = mesh.area(k);
    // For local edge i: edges F_s, F_e of K opposite s_F and e_F (local edge index = local vertex index).
    struct Local {
        int s_vertex, e_vertex;
        int fs, fe;  // global edge ids of F_s, F_e
    };
    std::array<Local, 3> loc{};
    for (int i = 0; i < 3; ++i) {
        const auto el = edge_local(mesh, k, te[i]);
        loc[i] = {tv[el.s_local], tv[el.e_local], te[el.s_local], te[el.e_local]};
    }
    auto scaled_t = [&](int f) { return (mesh.sign(k, f) * mesh.edge(f).length) * mesh.edge(f).t; };
    double mass = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double li = mesh.edge(te[i]).length;
        for (int j = 0; j < 3; ++j) {
            const double lj = mesh.edge(te[j]).length;
            const double delta_ss = loc[i].s_vertex == loc[j].s_vertex ? 2.0 : 1.0;
            const double delta_se = loc[i].s_vertex == loc[j].e_vertex ? 2.0 : 1.0;
            const double delta_es = loc[i].e_vertex == loc[j].s_vertex ? 2.0 : 1.0;
            const double delta_ee = loc[i].e_vertex == loc[j].e_vertex ? 2.0 : 1.0;
            const double b = dof[i][0] * dof[j][0] * delta_ss * ai.form(scaled_t(loc[i].fe), scaled_t(loc[j].fe));
            const double d = dof[i][0] * dof[j][1] * delta_se * ai.form(scaled_t(loc[i].fe), scaled_t(loc[j].fs)) +
                             dof[i][1] * dof[j][0] * delta_es * ai.form(scaled_t(loc[i].fs), scaled_t(loc[j].fe));
            const double m = dof[i][1] * dof[j][1] * delta_ee * ai.form(scaled_t(loc[i].fs), scaled_t(loc[j].fs));
            mass += li * lj * (b - d + m) / (48.0 * area);
        }
    }
    Vec2 lsum{};
    for (int j = 0; j < 3; ++j)
        lsum += mesh.edge(te[j]).length * (dof[j][0] * scaled_t(loc[j].fe) - dof[j][1] * scaled_t(loc[j].fs));
    double mixed = 0.0;
    for (int i = 0; i < 3; ++i)
        mixed += sol.u[tv[i]] * mesh.sign(k, te[i]) * mesh.edge(te[i]).length * dot(mesh.edge(te[i]).n, lsum);
    return {mass, mixed / (12.0 * area)};
}

/// (A^{-1} v, v)_K for v = sum_F |F| (c_s psi_s + c_e psi_e) via the B/D/M sums.
inline double bdm_mass(const Mesh &mesh, const CoefficientField &coeff, std::span<const std::array<double, 2>> c,
                       int k) {
    const auto &te = mesh.triangle_edges(k);
    const Sym2 &ai = coeff.Ainv(k);
    std::array<Vec2, 3> grads_rot{};
    const auto g = barycentric_gradients(mesh, k);
    for (int i = 0; i < 3; ++i) grads_rot[i] = rot90(g[i]);
    // v = sum_l lambda_l w_l with w_l collecting every basis function weighted by lambda_l
    std::array<Vec2, 3> w{};
    for (int i = 0; i < 3; ++i) {
        const auto el = edge_local(mesh, k, te[i]);
        const double len = mesh.edge(te[i]).length;
        w[el.s_local] += (len * c[i][0]) * grads_rot[el.e_local];
        w[el.e_local] -= (len * c[i][1]) * grads_rot[el.s_local];
    }
    // integral lambda_a lambda_b = |K| (1 + delta_ab) / 12
    double acc = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) acc += (a == b ? 2.0 : 1.0) * ai.form(w[a], w[b]);
    return acc * mesh.area(k) / 12.0;
}

}  // namespace detail

/// The three terms (A^{-1}s,s)_K, (s, grad u)_K, (A grad u, grad u)_K of xi_K^2 in closed form.
struct ElementTerms {
    double mass;
    double mixed;
    double energy;
    double xi_squared() const { return mass + 2.0 * mixed + energy; }
};

inline ElementTerms element_terms(const Mesh &mesh, const RecoveredFlux &rf, const P1Solution &sol,
                                  const CoefficientField &coeff, int k) {
    const auto &te = mesh.triangle_edges(k);
    ElementTerms out{};
    if (rf.space == FluxSpace::RT) {
        const std::array<double, 3> dof{rf.dofs[te[0]][0], rf.dofs[te[1]][0], rf.dofs[te[2]][0]};
        std::tie(out.mass, out.mixed) = detail::rt_terms(mesh, coeff, sol, dof, k);
    } else {
        const std::array<std::array<double, 2>, 3> dof{rf.dofs[te[0]], rf.dofs[te[1]], rf.dofs[te[2]]};
        std::tie(out.mass, out.mixed) = detail::bdm_terms(mesh, coeff, sol, dof, k);
    }
    out.energy = detail::energy_term(mesh, coeff, sol, k);
    return out;
}

/// Element indicator for triangle k; flux is the numerical flux of sol.
inline double element_indicator(const Mesh &mesh, int k, const RecoveredFlux &rf, const P1Solution &sol,
                                const NumericalFlux &flux, const CoefficientField &coeff, ElementMethod method) {
    switch (method) {
    case ElementMethod::ThreeTerm:
        return std::sqrt(std::max(0.0, element_terms(mesh, rf, sol, coeff, k).xi_squared()));
    case ElementMethod::Difference: {
        // sigma~|_K = sum_F sigma~_{F,K} |F| (psi_s + psi_e)
        const auto &te = mesh.triangle_edges(k);
        std::array<std::array<double, 2>, 3> diff{};
        for (int i = 0; i < 3; ++i) {
            const double tr = dot(flux.sigma[k], mesh.edge(te[i]).n);
            diff[i] = {rf.dofs[te[i]][0] - tr, rf.dofs[te[i]][1] - tr};
        }
        return std::sqrt(std::max(0.0, detail::bdm_mass(mesh, coeff, diff, k)));
    }
    case ElementMethod::Quadrature: {
        const auto rule = triangle_rule(4);
        double acc = 0.0;
        for (const auto &q : rule) {
            const Vec2 d = eval_flux(mesh, rf, k, q.bary) - flux.sigma[k];
            acc += q.weight * coeff.Ainv(k).form(d, d);
        }
        return std::sqrt(acc * mesh.area(k));
    }
    }
    throw std::invalid_argument("element_indicator: unknown method");
}

/// ||A^{-1/2}(tau - sigma~)||_{0,Omega} for any recovered field tau.
inline double recovery_distance(const Mesh &mesh, const RecoveredFlux &rf, const P1Solution &sol,
                                const NumericalFlux &flux, const CoefficientField &coeff,
                                ElementMethod method = ElementMethod::Difference) {
    double acc = 0.0;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const double v = element_indicator(mesh, k, rf, sol, flux, coeff, method);
        acc += v * v;
    }
    return std::sqrt(acc);
}

/// Edge indicators xi_F, element indicators xi_K and the global estimators for one space.
inline IndicatorSet improved_indicators(FluxSpace space, const P1Solution &sol, const CoefficientField &coeff,
                                        const NumericalFlux &flux, std::span<const double> gn,
                                        RecoveredFlux *recovered = nullptr,
                                        ElementMethod method = ElementMethod::Difference) {
    const Mesh &mesh = *sol.mesh;
    const RecoveryContext ctx{mesh, coeff, flux, gn};
    IndicatorSet out;
    out.kind = space == FluxSpace::RT ? "rt" : "bdm";
    out.edge.resize(mesh.num_edges());
    for (int f = 0; f < mesh.num_edges(); ++f) out.edge[f] = edge_indicator(space, ctx, f);
    RecoveredFlux rf = recover(space, mesh, coeff, flux, gn);
    out.element.resize(mesh.num_triangles());
    for (int k = 0; k < mesh.num_triangles(); ++k)
        out.element[k] = element_indicator(mesh, k, rf, sol, flux, coeff, method);
    finalize(out);
    if (recovered) *recovered = std::move(rf);
    return out;
}

// ---------------------------------------------------------------------------
// Residual indicator and data oscillation

/// eta_F = |F| |jump| / sqrt(lambda_min^- + lambda_min^+); Neumann uses the g_N mismatch.
inline double residual_edge_indicator(const RecoveryContext &ctx, int f) {
    const auto &e = ctx.mesh.edge(f);
    switch (e.kind) {
    case EdgeKind::Dirichlet:
        return 0.0;
    case EdgeKind::Neumann:
        return e.length * std::abs(ctx.flux.minus[f] - ctx.gn[f]) / std::sqrt(ctx.coeff.lambda_min(e.k_minus));
    case EdgeKind::Interior:
        break;
    }
    return e.length * std::abs(ctx.flux.minus[f] - ctx.flux.plus[f]) /
           std::sqrt(ctx.coeff.lambda_min(e.k_minus) + ctx.coeff.lambda_min(e.k_plus));
}

/// Map edge values to elements: (sum_{F in dK} v_F^2)^{1/2}.
inline std::vector<double> edge_to_element(const Mesh &mesh, std::span<const double> edge_values) {
    std::vector<double> out(mesh.num_triangles());
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        double acc = 0.0;
        for (int f : mesh.triangle_edges(k)) acc += edge_values[f] * edge_values[f];
        out[k] = std::sqrt(acc);
    }
    return out;
}

inline IndicatorSet residual_indicators(const P1Solution &sol, const CoefficientField &coeff,
                                        const NumericalFlux &flux, std::span<const double> gn) {
    const Mesh &mesh = *sol.mesh;
    const RecoveryContext ctx{mesh, coeff, flux, gn};
    IndicatorSet out;
    out.kind = "residual";
    out.edge.resize(mesh.num_edges());
    for (int f = 0; f < mesh.num_edges(); ++f) out.edge[f] = residual_edge_indicator(ctx, f);
    out.element = edge_to_element(mesh, out.edge);
    finalize(out);
    return out;
}

/// Edges whose two neighbours carry different region tags.
inline std::vector<bool> interface_edges(const Mesh &mesh) {
    std::vector<bool> out(mesh.num_edges(), false);
    for (int f = 0; f < mesh.num_edges(); ++f) {
        const auto &e = mesh.edge(f);
        out[f] = e.interior() && mesh.triangle(e.k_minus).region != mesh.triangle(e.k_plus).region;
    }
    return out;
}

/// Vertices on the closure of the coefficient interfaces or of the Dirichlet boundary.
inline std::vector<bool> interface_or_dirichlet_vertices(const Mesh &mesh) {
    std::vector<bool> out(mesh.num_vertices(), false);
    const auto iface = interface_edges(mesh);
    for (int f = 0; f < mesh.num_edges(); ++f) {
        const auto &e = mesh.edge(f);
        if (iface[f] || e.kind == EdgeKind::Dirichlet) out[e.s] = out[e.e] = true;
    }
    return out;
}

/// Data oscillation H_f: patch oscillation away from interfaces and the Dirichlet
/// boundary, h_K^2 weighted source norm on patches touching them.
inline double data_oscillation(const Mesh &mesh, const ScalarField &f, const CoefficientField &coeff,
                               int quad_order = 4) {
    const auto rule = triangle_rule(quad_order);
    const auto patches = vertex_patches(mesh);
    const auto special = interface_or_dirichlet_vertices(mesh);
    const int nt = mesh.num_triangles();
    std::vector<double> int_f(nt), int_f2(nt);
    for (int k = 0; k < nt; ++k) {
        const auto c = mesh.corners(k);
        int_f[k] = integrate(c, rule, [&](const Vec2 &x) { return f(x); });
        int_f2[k] = integrate(c, rule, [&](const Vec2 &x) { return f(x) * f(x); });
    }
    double total = 0.0;
    for (int z = 0; z < mesh.num_vertices(); ++z) {
        if (special[z]) {
            for (int k : patches[z]) {
                const double h = mesh.diameter(k);
                total += h * h / coeff.lambda_min(k) * int_f2[k];
            }
            continue;
        }
        double meas = 0.0, mean = 0.0, lmin = INFINITY;
        for (int k : patches[z]) {
            meas += mesh.area(k);
            mean += int_f[k];
            lmin = std::min(lmin, coeff.lambda_min(k));
        }
        mean /= meas;
        // ||f - f_z||^2 = integral f^2 - 2 f_z integral f + f_z^2 |omega_z|, evaluated by quadrature directly
        double osc = 0.0;
        for (int k : patches[z]) {
            const auto c = mesh.corners(k);
            osc += integrate(c, rule, [&](const Vec2 &x) {
                const double d = f(x) - mean;
                return d * d;
            });
        }
        total += meas / lmin * osc;
    }
    return std::sqrt(total);
}

}  // namespace fluxzz
