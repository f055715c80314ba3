#pragma once

// Conforming P1 finite elements for  -div(A grad u) = f  with mixed boundary conditions.

#include "fluxzz/geometry.hpp"
#include "fluxzz/mesh.hpp"
#include "fluxzz/problem.hpp"
#include "fluxzz/quadrature.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace fluxzz {

/// Piecewise constant SPD diffusion tensor, cached per triangle.
class CoefficientField {
public:
    CoefficientField() = default;

    CoefficientField(const Mesh &mesh, const std::map<int, Sym2> &by_region) {
        const int nt = mesh.num_triangles();
        a_.resize(nt);
        ainv_.resize(nt);
        lmin_.resize(nt);
        lmax_.resize(nt);
        for (int k = 0; k < nt; ++k) {
            const auto it = by_region.find(mesh.triangle(k).region);
            if (it == by_region.end())
                throw std::invalid_argument("no coefficient for region " + std::to_string(mesh.triangle(k).region));
            if (!is_spd(it->second)) throw std::invalid_argument("coefficient is not symmetric positive definite");
            a_[k] = it->second;
            ainv_[k] = it->second.inverse();
            const auto ev = it->second.eigenvalues();
            lmin_[k] = ev[0];
            lmax_[k] = ev[1];
            if (!(ev[0] > 0.0)) throw std::invalid_argument("coefficient is not positive definite");
        }
    }

    const Sym2 &A(int k) const { return a_[k]; }
    const Sym2 &Ainv(int k) const { return ainv_[k]; }
    double lambda_min(int k) const { return lmin_[k]; }
    double lambda_max(int k) const { return lmax_[k]; }
    int size() const { return static_cast<int>(a_.size()); }

private:
    std::vector<Sym2> a_, ainv_;
    std::vector<double> lmin_, lmax_;
};

/// Gradients of the barycentric coordinates of triangle k (constant on k).
inline std::array<Vec2, 3> barycentric_gradients(const Mesh &mesh, int k) {
    const auto c = mesh.corners(k);
    const double two_area = 2.0 * mesh.area(k);
    return {rot90(c[2] - c[1]) / two_area, rot90(c[0] - c[2]) / two_area, rot90(c[1] - c[0]) / two_area};
}

struct LinearSystem {
    std::shared_ptr<const Mesh> mesh;
    Eigen::SparseMatrix<double> matrix;     // free x free
    Eigen::VectorXd rhs;
    std::vector<int> free_index;            // per vertex, -1 for Dirichlet vertices
    std::vector<double> dirichlet_values;   // per vertex, NaN for free vertices

    int num_free() const { return static_cast<int>(rhs.size()); }
};

struct P1Solution {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> u;
    int iterations = 0;
    double relative_residual = 0.0;

    Vec2 gradient(int k) const {
        const auto g = barycentric_gradients(*mesh, k);
        const auto &t = mesh->triangle(k).v;
        return u[t[0]] * g[0] + u[t[1]] * g[1] + u[t[2]] * g[2];
    }

    double value(int k, const std::array<double, 3> &bary) const {
        const auto &t = mesh->triangle(k).v;
        return bary[0] * u[t[0]] + bary[1] * u[t[1]] + bary[2] * u[t[2]];
    }
};

/// g_N per edge (NaN on non-Neumann edges).
inline std::vector<double> neumann_values(const Mesh &mesh, const NeumannData &gn) {
    std::vector<double> out(mesh.num_edges(), std::numeric_limits<double>::quiet_NaN());
    for (int f = 0; f < mesh.num_edges(); ++f) {
        const auto &e = mesh.edge(f);
        if (e.kind == EdgeKind::Neumann) out[f] = gn(0.5 * (mesh.vertex(e.s) + mesh.vertex(e.e)), e.n);
    }
    return out;
}

/// Full stiffness matrix over all vertices (before Dirichlet elimination).
inline Eigen::SparseMatrix<double> assemble_stiffness(const Mesh &mesh, const CoefficientField &coeff) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto g = barycentric_gradients(mesh, k);
        const auto &t = mesh.triangle(k).v;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(t[i], t[j], mesh.area(k) * coeff.A(k).form(g[i], g[j]));
    }
    Eigen::SparseMatrix<double> m(mesh.num_vertices(), mesh.num_vertices());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

/// Load functional f(v) = (f, v) - (g_N, v)_{Gamma_N} for every hat function.
inline Eigen::VectorXd assemble_load(const Mesh &mesh, const ScalarField &f, std::span<const double> gn) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.num_vertices());
    const auto rule = triangle_rule(4);
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto c = mesh.corners(k);
        const auto &t = mesh.triangle(k).v;
        for (const auto &q : rule) {
            const double fv = f(map_point(c, q.bary)) * q.weight * mesh.area(k);
            for (int i = 0; i < 3; ++i) b[t[i]] += fv * q.bary[i];
        }
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto &edge = mesh.edge(e);
        if (edge.kind != EdgeKind::Neumann) continue;
        const double half = 0.5 * gn[e] * edge.length;
        b[edge.s] -= half;
        b[edge.e] -= half;
    }
    return b;
}

inline LinearSystem assemble(std::shared_ptr<const Mesh> mesh_ptr, const CoefficientField &coeff,
                             const ScalarField &f, const BoundaryData &boundary) {
    const Mesh &mesh = *mesh_ptr;
    if (coeff.size() != mesh.num_triangles()) throw std::invalid_argument("assemble: coefficient/mesh mismatch");
    const auto is_dirichlet = mesh.dirichlet_vertices();
    bool any_dirichlet = false;
    for (bool d : is_dirichlet) any_dirichlet = any_dirichlet || d;
    if (!any_dirichlet) throw std::invalid_argument("assemble: Dirichlet boundary has zero measure");

    LinearSystem sys;
    sys.mesh = mesh_ptr;
    const int nv = mesh.num_vertices();
    sys.free_index.assign(nv, -1);
    sys.dirichlet_values.assign(nv, std::numeric_limits<double>::quiet_NaN());
    int nfree = 0;
    for (int v = 0; v < nv; ++v) {
        if (is_dirichlet[v]) sys.dirichlet_values[v] = boundary.dirichlet(mesh.vertex(v));
        else sys.free_index[v] = nfree++;
    }

    const auto full = assemble_stiffness(mesh, coeff);
    const auto load = assemble_load(mesh, f, neumann_values(mesh, boundary.neumann));
    sys.rhs = Eigen::VectorXd::Zero(nfree);
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < full.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(full, col); it; ++it) {
            const int r = sys.free_index[it.row()];
            if (r < 0) continue;
            const int c = sys.free_index[it.col()];
            if (c >= 0) trip.emplace_back(r, c, it.value());
            else sys.rhs[r] -= it.value() * sys.dirichlet_values[it.col()];
        }
    }
    for (int v = 0; v < nv; ++v)
        if (sys.free_index[v] >= 0) sys.rhs[sys.free_index[v]] += load[v];
    sys.matrix.resize(nfree, nfree);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    return sys;
}

struct SolveReport {
    Eigen::VectorXd x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients; relative residual <= tol.
inline SolveReport solve_spd(const Eigen::SparseMatrix<double> &a, const Eigen::VectorXd &b, double tol,
                             int max_iter) {
    SolveReport rep;
    if (b.size() == 0) return rep;
    if (b.norm() == 0.0) {
        rep.x = Eigen::VectorXd::Zero(b.size());
        return rep;
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(max_iter);
    cg.compute(a);
    rep.x = cg.solve(b);
    rep.iterations = static_cast<int>(cg.iterations());
    rep.relative_residual = cg.error();
    if (cg.info() != Eigen::Success || !rep.x.allFinite())
        throw NumericalError("conjugate gradients did not converge in " + std::to_string(max_iter) +
                             " iterations (residual " + std::to_string(cg.error()) + ")");
    return rep;
}

inline P1Solution solve(const LinearSystem &sys, double tol = 1e-12, int max_iter = 100000) {
    const auto rep = solve_spd(sys.matrix, sys.rhs, tol, max_iter);
    P1Solution sol;
    sol.mesh = sys.mesh;
    sol.iterations = rep.iterations;
    sol.relative_residual = rep.relative_residual;
    sol.u.resize(sys.free_index.size());
    for (std::size_t v = 0; v < sys.free_index.size(); ++v)
        sol.u[v] = sys.free_index[v] >= 0 ? rep.x[sys.free_index[v]] : sys.dirichlet_values[v];
    return sol;
}

/// sigma = -A grad u_T per triangle together with its normal traces on every edge.
struct NumericalFlux {
    std::vector<Vec2> sigma;     // per triangle
    std::vector<double> minus;   // sigma|_{K^-} . n_F
    std::vector<double> plus;    // sigma|_{K^+} . n_F, NaN on boundary edges
};

inline NumericalFlux numerical_flux(const P1Solution &sol, const CoefficientField &coeff) {
    const Mesh &mesh = *sol.mesh;
    NumericalFlux out;
    out.sigma.resize(mesh.num_triangles());
    for (int k = 0; k < mesh.num_triangles(); ++k) out.sigma[k] = -(coeff.A(k) * sol.gradient(k));
    out.minus.resize(mesh.num_edges());
    out.plus.assign(mesh.num_edges(), std::numeric_limits<double>::quiet_NaN());
    for (int f = 0; f < mesh.num_edges(); ++f) {
        const auto &e = mesh.edge(f);
        out.minus[f] = dot(out.sigma[e.k_minus], e.n);
        if (e.k_plus >= 0) out.plus[f] = dot(out.sigma[e.k_plus], e.n);
    }
    return out;
}

/// Local vertex index of triangle k that coincides with one of the singular points, or -1.
inline int singular_corner(const Mesh &mesh, int k, std::span<const Vec2> singular_points) {
    if (singular_points.empty()) return -1;
    const auto c = mesh.corners(k);
    const double tol = 1e-14 * mesh.diameter(k);
    for (const auto &p : singular_points)
        for (int i = 0; i < 3; ++i)
            if (norm(c[i] - p) <= tol) return i;
    return -1;
}

/// Integrate a per-element scalar function f(k, x) over the mesh, using graded
/// quadrature on elements touching a singular point.
template <typename F>
std::vector<double> integrate_elementwise(const Mesh &mesh, int quad_order, std::span<const Vec2> singular_points,
                                          F &&f, const GradedRuleConfig &graded = {}) {
    const auto rule = triangle_rule(quad_order);
    std::vector<double> out(mesh.num_triangles());
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto c = mesh.corners(k);
        auto fk = [&](const Vec2 &x) { return f(k, x); };
        const int sc = singular_corner(mesh, k, singular_points);
        out[k] = sc >= 0 ? integrate_graded(c, sc, fk, graded) : integrate(c, rule, fk);
    }
    return out;
}

/// Squared energy error ||A^{1/2} grad(u - u_T)||^2_K per element.
inline std::vector<double> energy_error_squared(const P1Solution &sol, const VectorField &exact_gradient,
                                                const CoefficientField &coeff, int quad_order,
                                                std::span<const Vec2> singular_points = {}) {
    const Mesh &mesh = *sol.mesh;
    std::vector<Vec2> grads(mesh.num_triangles());
    for (int k = 0; k < mesh.num_triangles(); ++k) grads[k] = sol.gradient(k);
    return integrate_elementwise(mesh, quad_order, singular_points, [&](int k, const Vec2 &x) {
        const Vec2 d = exact_gradient(x) - grads[k];
        return coeff.A(k).form(d, d);
    });
}

/// ||A^{1/2} grad(u - u_T)||_{0,Omega}.
inline double energy_error(const P1Solution &sol, const VectorField &exact_gradient, const CoefficientField &coeff,
                           int quad_order, std::span<const Vec2> singular_points = {}) {
    double s = 0.0;
    for (double v : energy_error_squared(sol, exact_gradient, coeff, quad_order, singular_points)) s += v;
    return std::sqrt(s);
}

/// ||A^{1/2} grad u||_{0,Omega} of an exact solution.
inline double energy_norm(const Mesh &mesh, const VectorField &exact_gradient, const CoefficientField &coeff,
                          int quad_order, std::span<const Vec2> singular_points = {}) {
    double s = 0.0;
    for (double v : integrate_elementwise(mesh, quad_order, singular_points, [&](int k, const Vec2 &x) {
             const Vec2 g = exact_gradient(x);
             return coeff.A(k).form(g, g);
         }))
        s += v;
    return std::sqrt(s);
}

/// Assemble and solve a problem on the given mesh.
inline P1Solution solve_problem(const ProblemSpec &problem, std::shared_ptr<const Mesh> mesh,
                                const CoefficientField &coeff, double tol = 1e-12) {
    if (problem.validate_mesh) problem.validate_mesh(*mesh);
    return solve(assemble(std::move(mesh), coeff, problem.source, problem.boundary), tol);
}

}  // namespace fluxzz
