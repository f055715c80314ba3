#pragma once

// Conforming 2D triangulations with a globally oriented edge table.
//
// Edge orientation: K^- is the adjacent triangle with the lower id (the only one on
// the boundary). The endpoints s_F, e_F are chosen so that n_F = (t_2, -t_1) with
// t_F = (s_F - e_F) / |F| is the outward normal of K^-.

#include "fluxzz/geometry.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fluxzz {

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EdgeKind : std::uint8_t { Interior, Dirichlet, Neumann };

enum class BoundaryKind : std::uint8_t { Dirichlet, Neumann };

inline char boundary_letter(BoundaryKind k) { return k == BoundaryKind::Dirichlet ? 'D' : 'N'; }

struct Triangle {
    std::array<int, 3> v;       // counter-clockwise
    int region = 0;
    std::uint8_t newest = 0;    // local index of the newest vertex; refinement edge is opposite
};

struct Edge {
    int s = -1;  // initial point s_F
    int e = -1;  // terminal point e_F
    Vec2 t;      // (s - e) / |F|
    Vec2 n;      // (t_2, -t_1), outward for k_minus
    double length = 0.0;
    EdgeKind kind = EdgeKind::Interior;
    int k_minus = -1;
    int k_plus = -1;
    int x_minus = -1;  // vertex of k_minus opposite the edge
    int x_plus = -1;

    bool interior() const { return kind == EdgeKind::Interior; }
};

struct BoundaryTag {
    int a;
    int b;
    BoundaryKind kind;
};

/// Input triangle for build_mesh.
struct TriangleInput {
    std::array<int, 3> v;
    int region = 0;
};

/// Refers to an edge of one particular mesh value; lookups against another mesh fail.
struct EdgeHandle {
    std::uint64_t mesh_serial;
    int id;
};

class Mesh {
public:
    Mesh() = default;

    const std::vector<Vec2> &vertices() const { return vertices_; }
    const std::vector<Triangle> &triangles() const { return triangles_; }
    const std::vector<Edge> &edges() const { return edges_; }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    const Vec2 &vertex(int i) const { return vertices_.at(i); }
    const Triangle &triangle(int k) const { return triangles_.at(k); }
    const Edge &edge(int f) const { return edges_.at(f); }

    double area(int k) const { return areas_[k]; }
    double total_area() const {
        double a = 0.0;
        for (double x : areas_) a += x;
        return a;
    }

    /// Edge ids of triangle k; local edge i is opposite local vertex i.
    const std::array<int, 3> &triangle_edges(int k) const { return tri_edges_.at(k); }

    /// +1 if n_F is the outward normal of triangle k on edge f, -1 otherwise.
    int sign(int k, int f) const { return edges_[f].k_minus == k ? 1 : -1; }

    std::array<Vec2, 3> corners(int k) const {
        const auto &t = triangles_[k];
        return {vertices_[t.v[0]], vertices_[t.v[1]], vertices_[t.v[2]]};
    }

    Vec2 centroid(int k) const {
        const auto c = corners(k);
        return (c[0] + c[1] + c[2]) / 3.0;
    }

    double diameter(int k) const {
        const auto c = corners(k);
        return std::max({norm(c[1] - c[0]), norm(c[2] - c[1]), norm(c[0] - c[2])});
    }

    /// Opposite vertex of edge f in triangle k.
    int opposite_vertex(int k, int f) const {
        const auto &te = tri_edges_[k];
        for (int i = 0; i < 3; ++i)
            if (te[i] == f) return triangles_[k].v[i];
        throw MeshError("opposite_vertex: edge is not on the triangle");
    }

    std::uint64_t serial() const { return serial_; }
    EdgeHandle handle(int f) const {
        check_edge(f);
        return {serial_, f};
    }

    void check_edge(int f) const {
        if (f < 0 || f >= num_edges()) throw std::out_of_range("edge id " + std::to_string(f) + " out of range");
    }

    /// Boundary edges as (a, b, kind) with a, b the endpoint ids (in edge s, e order).
    std::vector<BoundaryTag> boundary_tags() const {
        std::vector<BoundaryTag> out;
        for (const auto &e : edges_)
            if (!e.interior())
                out.push_back({e.s, e.e, e.kind == EdgeKind::Dirichlet ? BoundaryKind::Dirichlet : BoundaryKind::Neumann});
        return out;
    }

    /// Vertex lies on a Dirichlet edge.
    std::vector<bool> dirichlet_vertices() const {
        std::vector<bool> out(vertices_.size(), false);
        for (const auto &e : edges_)
            if (e.kind == EdgeKind::Dirichlet) out[e.s] = out[e.e] = true;
        return out;
    }

    /// Assemble a mesh from triangles whose vertex order is already counter-clockwise
    /// and whose newest-vertex marker is set. Used by build_mesh and refinement.
    static Mesh assemble(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
                         const std::map<std::pair<int, int>, BoundaryKind> &boundary);

private:
    static std::uint64_t next_serial() {
        static std::atomic<std::uint64_t> counter{1};
        return counter.fetch_add(1);
    }

    std::vector<Vec2> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> edges_;
    std::vector<std::array<int, 3>> tri_edges_;
    std::vector<double> areas_;
    std::uint64_t serial_ = 0;
};

inline std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

namespace detail {

inline bool point_on_open_segment(const Vec2 &p, const Vec2 &a, const Vec2 &b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double c = cross(ab, p - a);
    if (std::abs(c) > 1e-12 * len2) return false;
    const double s = dot(p - a, ab) / len2;
    return s > 1e-12 && s < 1.0 - 1e-12;
}

}  // namespace detail

inline Mesh Mesh::assemble(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
                           const std::map<std::pair<int, int>, BoundaryKind> &boundary) {
    Mesh m;
    m.serial_ = next_serial();
    m.vertices_ = std::move(vertices);
    m.triangles_ = std::move(triangles);
    const int nt = static_cast<int>(m.triangles_.size());
    m.areas_.resize(nt);
    m.tri_edges_.resize(nt);

    std::map<std::pair<int, int>, int> edge_ids;
    for (int k = 0; k < nt; ++k) {
        const auto &t = m.triangles_[k];
        const double a = signed_area(m.vertices_[t.v[0]], m.vertices_[t.v[1]], m.vertices_[t.v[2]]);
        if (!(a > 0.0)) throw MeshError("triangle " + std::to_string(k) + " is degenerate or clockwise");
        m.areas_[k] = a;
        for (int i = 0; i < 3; ++i) {
            // local edge i runs from v[i+1] to v[i+2] in counter-clockwise order
            const int va = t.v[(i + 1) % 3], vb = t.v[(i + 2) % 3];
            const auto key = edge_key(va, vb);
            auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(m.edges_.size()));
            if (inserted) {
                Edge e;
                e.k_minus = k;
                e.x_minus = t.v[i];
                // outward normal of K^- is rot270(vb - va); n = rot270(t) requires t ~ (vb - va)
                e.s = vb;
                e.e = va;
                m.edges_.push_back(e);
            } else {
                Edge &e = m.edges_[it->second];
                if (e.k_plus >= 0) throw MeshError("non-conforming input: edge shared by more than two triangles");
                if (e.s != va || e.e != vb)
                    throw MeshError("inconsistent orientation: edge traversed twice in the same direction");
                e.k_plus = k;
                e.x_plus = t.v[i];
            }
            m.tri_edges_[k][i] = it->second;
        }
    }

    std::size_t tagged_found = 0;
    for (auto &e : m.edges_) {
        const Vec2 d = m.vertices_[e.s] - m.vertices_[e.e];
        e.length = norm(d);
        e.t = d / e.length;
        e.n = rot270(e.t);
        const auto tag = boundary.find(edge_key(e.s, e.e));
        if (e.k_plus >= 0) {
            if (tag != boundary.end()) throw MeshError("boundary tag on interior edge");
            e.kind = EdgeKind::Interior;
            continue;
        }
        if (tag == boundary.end()) {
            for (int v = 0; v < m.num_vertices(); ++v)
                if (detail::point_on_open_segment(m.vertices_[v], m.vertices_[e.s], m.vertices_[e.e]))
                    throw MeshError("non-conforming input: hanging node " + std::to_string(v));
            throw MeshError("untagged boundary edge (" + std::to_string(e.s) + ", " + std::to_string(e.e) + ")");
        }
        e.kind = tag->second == BoundaryKind::Dirichlet ? EdgeKind::Dirichlet : EdgeKind::Neumann;
        ++tagged_found;
    }
    if (tagged_found != boundary.size()) throw MeshError("boundary tag does not match any mesh edge");
    return m;
}

/// Build a mesh from raw input. Clockwise triangles are reoriented; each triangle's
/// refinement edge is initialized to its longest edge.
inline Mesh build_mesh(std::vector<Vec2> vertices, const std::vector<TriangleInput> &triangles,
                       const std::vector<BoundaryTag> &boundary) {
    for (const auto &p : vertices)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("non-finite vertex coordinate");
    std::vector<Triangle> tris;
    tris.reserve(triangles.size());
    const int nv = static_cast<int>(vertices.size());
    for (const auto &in : triangles) {
        Triangle t{in.v, in.region, 0};
        for (int v : t.v)
            if (v < 0 || v >= nv) throw MeshError("triangle references unknown vertex");
        const double a = signed_area(vertices[t.v[0]], vertices[t.v[1]], vertices[t.v[2]]);
        if (a == 0.0 || !std::isfinite(a)) throw MeshError("degenerate (zero-area) triangle");
        if (a < 0.0) std::swap(t.v[1], t.v[2]);
        int longest = 0;
        double best = -1.0;
        for (int i = 0; i < 3; ++i) {
            const double len = norm(vertices[t.v[(i + 1) % 3]] - vertices[t.v[(i + 2) % 3]]);
            if (len > best * (1.0 + 1e-12)) {
                best = len;
                longest = i;
            }
        }
        t.newest = static_cast<std::uint8_t>(longest);
        tris.push_back(t);
    }
    std::map<std::pair<int, int>, BoundaryKind> bmap;
    for (const auto &b : boundary) {
        if (b.a < 0 || b.a >= nv || b.b < 0 || b.b >= nv) throw MeshError("boundary tag references unknown vertex");
        if (!bmap.emplace(edge_key(b.a, b.b), b.kind).second) throw MeshError("duplicate boundary tag");
    }
    return Mesh::assemble(std::move(vertices), std::move(tris), bmap);
}

/// Triangles sharing edge f: {K^-} on the boundary, {K^-, K^+} otherwise.
inline std::vector<int> edge_patch(const Mesh &mesh, int f) {
    mesh.check_edge(f);
    const auto &e = mesh.edge(f);
    if (e.k_plus < 0) return {e.k_minus};
    return {e.k_minus, e.k_plus};
}

inline std::vector<int> edge_patch(const Mesh &mesh, EdgeHandle h) {
    if (h.mesh_serial != mesh.serial()) throw std::out_of_range("stale edge handle: mesh has changed");
    return edge_patch(mesh, h.id);
}

/// Triangles incident to each vertex.
inline std::vector<std::vector<int>> vertex_patches(const Mesh &mesh) {
    std::vector<std::vector<int>> out(mesh.num_vertices());
    for (int k = 0; k < mesh.num_triangles(); ++k)
        for (int v : mesh.triangle(k).v) out[v].push_back(k);
    return out;
}

/// Smallest interior angle over all triangles, in radians.
inline double min_angle(const Mesh &mesh) {
    double best = 4.0;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto c = mesh.corners(k);
        for (int i = 0; i < 3; ++i) {
            const Vec2 a = c[(i + 1) % 3] - c[i], b = c[(i + 2) % 3] - c[i];
            best = std::min(best, std::atan2(std::abs(cross(a, b)), dot(a, b)));
        }
    }
    return best;
}

/// V - E + T.
inline int euler_characteristic(const Mesh &mesh) {
    return mesh.num_vertices() - mesh.num_edges() + mesh.num_triangles();
}

enum class GridPattern { Diagonal, CrissCross };

/// Structured triangulation of [x0,x1]x[y0,y1] with nx by ny cells. Boundary kinds
/// come from classify(midpoint of boundary edge); regions from region(centroid).
template <typename Classify, typename Region>
Mesh structured_mesh(int nx, int ny, double x0, double x1, double y0, double y1, GridPattern pattern,
                     Classify &&classify, Region &&region) {
    if (nx < 1 || ny < 1) throw MeshError("structured_mesh: need at least one cell per direction");
    std::vector<Vec2> verts;
    auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            verts.push_back({x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny});
    std::vector<std::array<int, 3>> tris;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            if (pattern == GridPattern::Diagonal) {
                tris.push_back({a, b, c});
                tris.push_back({a, c, d});
            } else {
                const int m = static_cast<int>(verts.size());
                verts.push_back({x0 + (x1 - x0) * (i + 0.5) / nx, y0 + (y1 - y0) * (j + 0.5) / ny});
                tris.push_back({a, b, m});
                tris.push_back({b, c, m});
                tris.push_back({c, d, m});
                tris.push_back({d, a, m});
            }
        }
    }
    std::vector<TriangleInput> in;
    for (const auto &t : tris) {
        const Vec2 g = (verts[t[0]] + verts[t[1]] + verts[t[2]]) / 3.0;
        in.push_back({t, region(g)});
    }
    std::vector<BoundaryTag> bnd;
    auto add = [&](int a, int b) { bnd.push_back({a, b, classify((verts[a] + verts[b]) / 2.0)}); };
    for (int i = 0; i < nx; ++i) {
        add(vid(i, 0), vid(i + 1, 0));
        add(vid(i, ny), vid(i + 1, ny));
    }
    for (int j = 0; j < ny; ++j) {
        add(vid(0, j), vid(0, j + 1));
        add(vid(nx, j), vid(nx, j + 1));
    }
    return build_mesh(std::move(verts), in, bnd);
}

inline Mesh structured_mesh(int nx, int ny, double x0, double x1, double y0, double y1,
                            GridPattern pattern = GridPattern::Diagonal) {
    return structured_mesh(
        nx, ny, x0, x1, y0, y1, pattern, [](const Vec2 &) { return BoundaryKind::Dirichlet; },
        [](const Vec2 &) { return 0; });
}

}  // namespace fluxzz
