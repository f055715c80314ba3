#pragma once

// Plain-text mesh format:
//
//   vertices N triangles M boundary B
//   x y                  (N lines)
//   v0 v1 v2 region      (M lines)
//   va vb tag            (B lines, tag is D or N)
//
// Indices are 0-based; reals are written with 17 significant digits.

#include "fluxzz/format.hpp"
#include "fluxzz/mesh.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace fluxzz {

inline void write_mesh(std::ostream &os, const Mesh &mesh) {
    const auto tags = mesh.boundary_tags();
    os << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << " boundary "
       << tags.size() << '\n';
    for (const auto &p : mesh.vertices()) os << format_real(p.x) << ' ' << format_real(p.y) << '\n';
    for (const auto &t : mesh.triangles()) os << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.region << '\n';
    for (const auto &b : tags) os << b.a << ' ' << b.b << ' ' << boundary_letter(b.kind) << '\n';
}

inline std::string mesh_to_string(const Mesh &mesh) {
    std::ostringstream os;
    write_mesh(os, mesh);
    return os.str();
}

inline Mesh read_mesh(std::istream &is) {
    std::string w1, w2, w3;
    long long n = -1, m = -1, b = -1;
    if (!(is >> w1 >> n >> w2 >> m >> w3 >> b) || w1 != "vertices" || w2 != "triangles" || w3 != "boundary" ||
        n < 0 || m < 0 || b < 0)
        throw MeshError("mesh file: malformed header");
    std::vector<Vec2> verts(static_cast<std::size_t>(n));
    for (auto &p : verts) {
        std::string sx, sy;
        if (!(is >> sx >> sy)) throw MeshError("mesh file: truncated vertex block");
        p = {parse_real(sx), parse_real(sy)};
    }
    std::vector<TriangleInput> tris(static_cast<std::size_t>(m));
    for (auto &t : tris)
        if (!(is >> t.v[0] >> t.v[1] >> t.v[2] >> t.region)) throw MeshError("mesh file: truncated triangle block");
    std::vector<BoundaryTag> tags(static_cast<std::size_t>(b));
    for (auto &t : tags) {
        std::string tag;
        if (!(is >> t.a >> t.b >> tag)) throw MeshError("mesh file: truncated boundary block");
        if (tag == "D") t.kind = BoundaryKind::Dirichlet;
        else if (tag == "N") t.kind = BoundaryKind::Neumann;
        else throw MeshError("mesh file: boundary tag must be D or N, got '" + tag + "'");
    }
    return build_mesh(std::move(verts), tris, tags);
}

inline Mesh mesh_from_string(const std::string &text) {
    std::istringstream is(text);
    return read_mesh(is);
}

}  // namespace fluxzz
