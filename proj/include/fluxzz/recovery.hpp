#pragma once

// H(div) flux recovery from the piecewise constant numerical flux.
//
// Explicit recovery: on every interior edge the local weighted L2 problem over the
// edge patch has a closed-form solution, a weighted average of the two normal traces
// (one weight for RT, two for BDM). Implicit recovery solves the global weighted L2
// projection and serves as a reference.

#include "fluxzz/basis.hpp"
#include "fluxzz/fem.hpp"
#include "fluxzz/mesh.hpp"
#include "fluxzz/quadrature.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxzz {

enum class FluxSpace { RT, BDM };

inline const char *to_string(FluxSpace s) { return s == FluxSpace::RT ? "RT" : "BDM"; }

/// H(div) field stored by edge degrees of freedom. The field is
///   sum_F |F| (dof_s psi_s,F + dof_e psi_e,F);
/// RT fields carry dof_s == dof_e so that the edge term is dof |F| phi_F.
struct RecoveredFlux {
    FluxSpace space = FluxSpace::RT;
    std::vector<std::array<double, 2>> dofs;
};

/// (A^{-1} phi_F, phi_F) on the triangles adjacent to an edge.
struct GammaPair {
    double minus = 0.0;
    double plus = std::numeric_limits<double>::quiet_NaN();
};

/// Gram entries (A^{-1} psi_i, psi_j) on one triangle, i, j in {s, e}.
struct BetaTriple {
    double ss = 0.0;
    double se = 0.0;
    double ee = 0.0;
};

struct BetaPair {
    BetaTriple minus;
    BetaTriple plus;
    bool has_plus = false;
};

/// gamma on triangle k for edge f:
///   (sum_i |x_i - x_F|^2_{A^-1} + |x_0 + x_1 + x_2 - 3 x_F|^2_{A^-1}) / (48 |K|)
inline double gamma_on(const Mesh &mesh, const CoefficientField &coeff, int k, int f) {
    const auto c = mesh.corners(k);
    const Vec2 xf = mesh.vertex(mesh.opposite_vertex(k, f));
    const Sym2 &ainv = coeff.Ainv(k);
    double acc = 0.0;
    for (const auto &x : c) acc += ainv.form(x - xf, x - xf);
    const Vec2 m = c[0] + c[1] + c[2] - 3.0 * xf;
    acc += ainv.form(m, m);
    return acc / (48.0 * mesh.area(k));
}

inline GammaPair gamma_coeffs(const Mesh &mesh, const CoefficientField &coeff, int f) {
    const auto &e = mesh.edge(f);
    GammaPair g;
    g.minus = gamma_on(mesh, coeff, e.k_minus, f);
    if (e.k_plus >= 0) g.plus = gamma_on(mesh, coeff, e.k_plus, f);
    return g;
}

inline BetaTriple beta_on(const Mesh &mesh, const CoefficientField &coeff, int k, int f) {
    const auto &e = mesh.edge(f);
    const Vec2 x = mesh.vertex(mesh.opposite_vertex(k, f));
    const Vec2 ds = x - mesh.vertex(e.s), de = x - mesh.vertex(e.e);
    const Sym2 &ainv = coeff.Ainv(k);
    const double area = mesh.area(k);
    return {ainv.form(ds, ds) / (24.0 * area), ainv.form(ds, de) / (48.0 * area), ainv.form(de, de) / (24.0 * area)};
}

inline BetaPair beta_coeffs(const Mesh &mesh, const CoefficientField &coeff, int f) {
    const auto &e = mesh.edge(f);
    BetaPair b;
    b.minus = beta_on(mesh, coeff, e.k_minus, f);
    if (e.k_plus >= 0) {
        b.plus = beta_on(mesh, coeff, e.k_plus, f);
        b.has_plus = true;
    }
    return b;
}

/// RT weight a_F = gamma^- / (gamma^- + gamma^+).
inline double rt_weight(const GammaPair &g) { return g.minus / (g.minus + g.plus); }

struct BdmWeights {
    double s;
    double e;
};

inline constexpr double kBdmDeterminantFloor = 1e-300;

/// BDM weights (b_s, b_e) from the Gram entries of both sides.
inline BdmWeights bdm_weights(const BetaPair &b) {
    const double ss = b.minus.ss + b.plus.ss, se = b.minus.se + b.plus.se, ee = b.minus.ee + b.plus.ee;
    const double det = ss * ee - se * se;
    if (!(std::abs(det) > kBdmDeterminantFloor)) throw NumericalError("BDM local system is singular");
    return {((b.minus.ss + b.minus.se) * ee - (b.minus.se + b.minus.ee) * se) / det,
            ((b.minus.se + b.minus.ee) * ss - (b.minus.ss + b.minus.se) * se) / det};
}

/// Value carried by a boundary edge: sigma~^- on Dirichlet edges, g_N on Neumann edges.
inline double boundary_dof(const Mesh &mesh, const NumericalFlux &flux, std::span<const double> gn, int f) {
    return mesh.edge(f).kind == EdgeKind::Neumann ? gn[f] : flux.minus[f];
}

inline RecoveredFlux rt_recover(const Mesh &mesh, const CoefficientField &coeff, const NumericalFlux &flux,
                                std::span<const double> gn) {
    RecoveredFlux out;
    out.space = FluxSpace::RT;
    out.dofs.resize(mesh.num_edges());
    for (int f = 0; f < mesh.num_edges(); ++f) {
        double v;
        if (mesh.edge(f).interior()) {
            const double a = rt_weight(gamma_coeffs(mesh, coeff, f));
            v = a * flux.minus[f] + (1.0 - a) * flux.plus[f];
        } else {
            v = boundary_dof(mesh, flux, gn, f);
        }
        out.dofs[f] = {v, v};
    }
    return out;
}

inline RecoveredFlux bdm_recover(const Mesh &mesh, const CoefficientField &coeff, const NumericalFlux &flux,
                                 std::span<const double> gn) {
    RecoveredFlux out;
    out.space = FluxSpace::BDM;
    out.dofs.resize(mesh.num_edges());
    for (int f = 0; f < mesh.num_edges(); ++f) {
        if (mesh.edge(f).interior()) {
            const auto b = bdm_weights(beta_coeffs(mesh, coeff, f));
            out.dofs[f] = {b.s * flux.minus[f] + (1.0 - b.s) * flux.plus[f],
                           b.e * flux.minus[f] + (1.0 - b.e) * flux.plus[f]};
        } else {
            const double v = boundary_dof(mesh, flux, gn, f);
            out.dofs[f] = {v, v};
        }
    }
    return out;
}

inline RecoveredFlux recover(FluxSpace space, const Mesh &mesh, const CoefficientField &coeff,
                             const NumericalFlux &flux, std::span<const double> gn) {
    return space == FluxSpace::RT ? rt_recover(mesh, coeff, flux, gn) : bdm_recover(mesh, coeff, flux, gn);
}

/// Evaluate the recovered field on triangle k at barycentric coordinates.
inline Vec2 eval_flux(const Mesh &mesh, const RecoveredFlux &rf, int k, const std::array<double, 3> &bary) {
    Vec2 out{};
    for (int f : mesh.triangle_edges(k)) {
        const auto psi = bdm_basis(mesh, k, f, bary);
        const double len = mesh.edge(f).length;
        out += len * (rf.dofs[f][0] * psi[0] + rf.dofs[f][1] * psi[1]);
    }
    return out;
}

/// Evaluate the recovered field on triangle k at a physical point inside it.
inline Vec2 eval_flux(const Mesh &mesh, const RecoveredFlux &rf, int k, const Vec2 &point) {
    const auto c = mesh.corners(k);
    const auto bary = barycentric(c[0], c[1], c[2], point);
    constexpr double tol = 1e-12;
    if (bary[0] < -tol || bary[1] < -tol || bary[2] < -tol)
        throw std::out_of_range("eval_flux: point outside triangle " + std::to_string(k));
    return eval_flux(mesh, rf, k, bary);
}

// ---------------------------------------------------------------------------
// Quadrature-assembled local problems on the edge patch.

namespace detail {

/// sigma~_F restricted to triangle k of the patch: sigma~_{F,K} |F| phi_F.
inline Vec2 edge_part_of_flux(const Mesh &mesh, const NumericalFlux &flux, int k, int f,
                              const std::array<double, 3> &bary) {
    const auto &e = mesh.edge(f);
    const double trace = (k == e.k_minus) ? flux.minus[f] : flux.plus[f];
    return (trace * e.length) * rt_basis(mesh, k, f, bary);
}

}  // namespace detail

/// Solve (A^{-1} sigma_F, tau)_{omega_F} = (A^{-1} sigma~_F, tau) for tau = |F| phi_F with
/// quadrature-assembled scalars. Returns the RT edge dof.
inline double local_rt_solve(const Mesh &mesh, const CoefficientField &coeff, const NumericalFlux &flux, int f) {
    if (!mesh.edge(f).interior()) throw std::invalid_argument("local_rt_solve: edge is not interior");
    const auto rule = triangle_rule(4);
    const double len = mesh.edge(f).length;
    double lhs = 0.0, rhs = 0.0;
    for (int k : edge_patch(mesh, f)) {
        for (const auto &q : rule) {
            const Vec2 tau = len * rt_basis(mesh, k, f, q.bary);
            const Vec2 st = detail::edge_part_of_flux(mesh, flux, k, f, q.bary);
            const double w = q.weight * mesh.area(k);
            lhs += w * coeff.Ainv(k).form(tau, tau);
            rhs += w * coeff.Ainv(k).form(st, tau);
        }
    }
    return rhs / lhs;
}

/// 2x2 Galerkin solve on the edge patch for the BDM dofs (s, e).
inline std::array<double, 2> local_bdm_solve(const Mesh &mesh, const CoefficientField &coeff,
                                             const NumericalFlux &flux, int f) {
    if (!mesh.edge(f).interior()) throw std::invalid_argument("local_bdm_solve: edge is not interior");
    const auto rule = triangle_rule(4);
    const double len = mesh.edge(f).length;
    double m00 = 0, m01 = 0, m11 = 0, r0 = 0, r1 = 0;
    for (int k : edge_patch(mesh, f)) {
        for (const auto &q : rule) {
            const auto psi = bdm_basis(mesh, k, f, q.bary);
            const Vec2 t0 = len * psi[0], t1 = len * psi[1];
            const Vec2 st = detail::edge_part_of_flux(mesh, flux, k, f, q.bary);
            const double w = q.weight * mesh.area(k);
            const Sym2 &ai = coeff.Ainv(k);
            m00 += w * ai.form(t0, t0);
            m01 += w * ai.form(t0, t1);
            m11 += w * ai.form(t1, t1);
            r0 += w * ai.form(st, t0);
            r1 += w * ai.form(st, t1);
        }
    }
    const double det = m00 * m11 - m01 * m01;
    if (!(std::abs(det) > kBdmDeterminantFloor)) throw NumericalError("local_bdm_solve: singular system");
    return {(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det};
}

/// ||A^{-1/2}(tau - sigma~_F)||_{omega_F} by quadrature for tau = |F|(c_s psi_s + c_e psi_e).
inline double edge_objective(const Mesh &mesh, const CoefficientField &coeff, const NumericalFlux &flux, int f,
                             double cs, double ce) {
    const auto rule = triangle_rule(4);
    const double len = mesh.edge(f).length;
    double acc = 0.0;
    for (int k : edge_patch(mesh, f)) {
        for (const auto &q : rule) {
            const auto psi = bdm_basis(mesh, k, f, q.bary);
            const Vec2 d = len * (cs * psi[0] + ce * psi[1]) - detail::edge_part_of_flux(mesh, flux, k, f, q.bary);
            acc += q.weight * mesh.area(k) * coeff.Ainv(k).form(d, d);
        }
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Global weighted L2 projection onto RT_{g,N} or BDM_{g,N}.

struct GlobalRecoveryReport {
    RecoveredFlux flux;
    int iterations = 0;
};

inline GlobalRecoveryReport global_recover(const Mesh &mesh, const CoefficientField &coeff,
                                           const NumericalFlux &flux, std::span<const double> gn, FluxSpace space,
                                           double tol = 1e-12, int max_iter = 100000) {
    const int per_edge = space == FluxSpace::RT ? 1 : 2;
    const int nloc = 3 * per_edge;
    std::vector<int> index(static_cast<std::size_t>(mesh.num_edges()) * per_edge, -1);
    int n = 0;
    for (int f = 0; f < mesh.num_edges(); ++f)
        if (mesh.edge(f).kind != EdgeKind::Neumann)
            for (int j = 0; j < per_edge; ++j) index[f * per_edge + j] = n++;

    const auto rule = triangle_rule(4);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    std::vector<Vec2> basis(nloc);
    std::vector<int> gidx(nloc);
    std::vector<double> fixed(nloc);
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto &te = mesh.triangle_edges(k);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < per_edge; ++j) {
                gidx[i * per_edge + j] = index[te[i] * per_edge + j];
                fixed[i * per_edge + j] = mesh.edge(te[i]).kind == EdgeKind::Neumann ? gn[te[i]] : 0.0;
            }
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nloc, nloc);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nloc);
        const Sym2 &ai = coeff.Ainv(k);
        for (const auto &q : rule) {
            for (int i = 0; i < 3; ++i) {
                const double len = mesh.edge(te[i]).length;
                if (per_edge == 1) {
                    basis[i] = len * rt_basis(mesh, k, te[i], q.bary);
                } else {
                    const auto psi = bdm_basis(mesh, k, te[i], q.bary);
                    basis[2 * i] = len * psi[0];
                    basis[2 * i + 1] = len * psi[1];
                }
            }
            const double w = q.weight * mesh.area(k);
            for (int a = 0; a < nloc; ++a) {
                r[a] += w * ai.form(flux.sigma[k], basis[a]);
                for (int b = 0; b < nloc; ++b) m(a, b) += w * ai.form(basis[a], basis[b]);
            }
        }
        for (int a = 0; a < nloc; ++a) {
            if (gidx[a] < 0) continue;
            double ra = r[a];
            for (int b = 0; b < nloc; ++b) {
                if (gidx[b] >= 0) trip.emplace_back(gidx[a], gidx[b], m(a, b));
                else ra -= m(a, b) * fixed[b];
            }
            rhs[gidx[a]] += ra;
        }
    }
    Eigen::SparseMatrix<double> mat(n, n);
    mat.setFromTriplets(trip.begin(), trip.end());
    const auto rep = solve_spd(mat, rhs, tol, max_iter);

    GlobalRecoveryReport out;
    out.iterations = rep.iterations;
    out.flux.space = space;
    out.flux.dofs.resize(mesh.num_edges());
    for (int f = 0; f < mesh.num_edges(); ++f) {
        if (mesh.edge(f).kind == EdgeKind::Neumann) {
            out.flux.dofs[f] = {gn[f], gn[f]};
        } else if (per_edge == 1) {
            const double v = n > 0 ? rep.x[index[f]] : 0.0;
            out.flux.dofs[f] = {v, v};
        } else {
            out.flux.dofs[f] = {rep.x[index[2 * f]], rep.x[index[2 * f + 1]]};
        }
    }
    return out;
}

}  // namespace fluxzz
