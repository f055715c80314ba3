#pragma once

// Newest-vertex bisection with conformity closure.

#include "fluxzz/mesh.hpp"

#include <deque>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace fluxzz {

struct BisectOptions {
    int closure_depth_limit = 100;
};

namespace detail {

// Triangle with the newest vertex first: (newest, a, b) counter-clockwise, refinement edge (a, b).
using NvbTriangle = std::array<int, 3>;

inline NvbTriangle to_nvb(const Triangle &t) {
    return {t.v[t.newest], t.v[(t.newest + 1) % 3], t.v[(t.newest + 2) % 3]};
}

inline void bisect_recursive(const NvbTriangle &t, int region,
                             const std::map<std::pair<int, int>, int> &midpoints,
                             std::vector<Triangle> &out) {
    const auto it = midpoints.find(edge_key(t[1], t[2]));
    if (it == midpoints.end()) {
        out.push_back({{t[0], t[1], t[2]}, region, 0});
        return;
    }
    const int m = it->second;
    bisect_recursive({m, t[0], t[1]}, region, midpoints, out);
    bisect_recursive({m, t[2], t[0]}, region, midpoints, out);
}

}  // namespace detail

/// Bisect the marked triangles (newest-vertex rule) and close the result to a
/// conforming mesh. Region and boundary tags are inherited.
inline Mesh bisect(const Mesh &mesh, std::span<const int> marked, const BisectOptions &opts = {}) {
    if (marked.empty()) throw MeshError("bisect: no triangles marked");
    const int nt = mesh.num_triangles();

    auto refinement_edge = [&](int k) { return mesh.triangle_edges(k)[mesh.triangle(k).newest]; };

    // Edge marks with closure: a triangle with any marked edge needs its refinement edge marked.
    std::vector<int> edge_depth(mesh.num_edges(), -1);
    std::deque<std::pair<int, int>> work;  // (edge, depth)
    auto mark_edge = [&](int f, int depth) {
        if (edge_depth[f] >= 0) return;
        if (depth > opts.closure_depth_limit)
            throw MeshError("bisect: conformity closure exceeded depth limit (inconsistent refinement edges)");
        edge_depth[f] = depth;
        work.emplace_back(f, depth);
    };
    for (int k : marked) {
        if (k < 0 || k >= nt) throw MeshError("bisect: marked triangle id out of range");
        mark_edge(refinement_edge(k), 0);
    }
    while (!work.empty()) {
        const auto [f, depth] = work.front();
        work.pop_front();
        const auto &e = mesh.edge(f);
        for (int k : {e.k_minus, e.k_plus})
            if (k >= 0) mark_edge(refinement_edge(k), depth + 1);
    }

    std::vector<Vec2> verts = mesh.vertices();
    std::map<std::pair<int, int>, int> midpoints;
    std::map<std::pair<int, int>, BoundaryKind> boundary;
    for (int f = 0; f < mesh.num_edges(); ++f) {
        const auto &e = mesh.edge(f);
        int mid = -1;
        if (edge_depth[f] >= 0) {
            mid = static_cast<int>(verts.size());
            verts.push_back(0.5 * (mesh.vertex(e.s) + mesh.vertex(e.e)));
            midpoints.emplace(edge_key(e.s, e.e), mid);
        }
        if (e.interior()) continue;
        const auto kind = e.kind == EdgeKind::Dirichlet ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
        if (mid < 0) {
            boundary.emplace(edge_key(e.s, e.e), kind);
        } else {
            boundary.emplace(edge_key(e.s, mid), kind);
            boundary.emplace(edge_key(mid, e.e), kind);
        }
    }

    std::vector<Triangle> tris;
    tris.reserve(nt + 2 * midpoints.size());
    for (int k = 0; k < nt; ++k)
        detail::bisect_recursive(detail::to_nvb(mesh.triangle(k)), mesh.triangle(k).region, midpoints, tris);
    return Mesh::assemble(std::move(verts), std::move(tris), boundary);
}

/// Bisect every triangle once.
inline Mesh bisect_all(const Mesh &mesh) {
    std::vector<int> all(mesh.num_triangles());
    for (int k = 0; k < mesh.num_triangles(); ++k) all[k] = k;
    return bisect(mesh, all);
}

}  // namespace fluxzz
