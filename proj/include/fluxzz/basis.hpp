#pragma once

// Lowest-order Raviart-Thomas and BDM edge basis functions in barycentric form.
//
//   phi_F   = lambda_s curl(lambda_e) - lambda_e curl(lambda_s)
//   psi_s,F = lambda_s curl(lambda_e),   psi_e,F = -lambda_e curl(lambda_s)
//
// with curl(v) = (-dv/dy, dv/dx), so that phi_F . n_F = 1/|F| and
// psi_s,F . n_F = lambda_s / |F| on F.

#include "fluxzz/fem.hpp"
#include "fluxzz/geometry.hpp"
#include "fluxzz/mesh.hpp"

#include <array>

namespace fluxzz {

struct EdgeLocal {
    int s_local;  // local vertex index of s_F in the triangle
    int e_local;  // local vertex index of e_F
};

inline EdgeLocal edge_local(const Mesh &mesh, int k, int f) {
    const auto &t = mesh.triangle(k).v;
    const auto &e = mesh.edge(f);
    EdgeLocal out{-1, -1};
    for (int i = 0; i < 3; ++i) {
        if (t[i] == e.s) out.s_local = i;
        if (t[i] == e.e) out.e_local = i;
    }
    if (out.s_local < 0 || out.e_local < 0) throw MeshError("edge_local: edge is not on the triangle");
    return out;
}

/// psi_s,F and psi_e,F on triangle k at barycentric point bary.
inline std::array<Vec2, 2> bdm_basis(const Mesh &mesh, int k, int f, const std::array<double, 3> &bary) {
    const auto g = barycentric_gradients(mesh, k);
    const auto loc = edge_local(mesh, k, f);
    return {bary[loc.s_local] * rot90(g[loc.e_local]), -bary[loc.e_local] * rot90(g[loc.s_local])};
}

/// phi_F on triangle k at barycentric point bary.
inline Vec2 rt_basis(const Mesh &mesh, int k, int f, const std::array<double, 3> &bary) {
    const auto psi = bdm_basis(mesh, k, f, bary);
    return psi[0] + psi[1];
}

/// Geometric form of phi_F on triangle k: sign_K(F) (x - x_F) / (2|K|).
inline Vec2 rt_basis_geometric(const Mesh &mesh, int k, int f, const Vec2 &x) {
    const Vec2 xf = mesh.vertex(mesh.opposite_vertex(k, f));
    return (mesh.sign(k, f) / (2.0 * mesh.area(k))) * (x - xf);
}

}  // namespace fluxzz
