#include "fluxzz/mesh.hpp"
#include "fluxzz/mesh_io.hpp"
#include "fluxzz/refine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fluxzz;

namespace {

Mesh unit_square_two() {
    return build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0, 1, 2}, 0}, {{0, 2, 3}, 0}},
                      {{0, 1, BoundaryKind::Dirichlet},
                       {1, 2, BoundaryKind::Dirichlet},
                       {2, 3, BoundaryKind::Neumann},
                       {3, 0, BoundaryKind::Dirichlet}});
}

Vec2 outward_normal(const Mesh &m, int k, int f) {
    // outward normal of k on f from the opposite vertex
    const auto &e = m.edge(f);
    const Vec2 t = m.vertex(e.e) - m.vertex(e.s);
    Vec2 n = rot270(t / norm(t));
    const Vec2 mid = 0.5 * (m.vertex(e.s) + m.vertex(e.e));
    if (dot(n, mid - m.vertex(m.opposite_vertex(k, f))) < 0) n = -1.0 * n;
    return n;
}

void expect_consistent(const Mesh &m) {
    EXPECT_EQ(euler_characteristic(m), 1);
    for (int f = 0; f < m.num_edges(); ++f) {
        const auto &e = m.edge(f);
        EXPECT_NEAR(norm(e.t), 1.0, 1e-14);
        EXPECT_NEAR(norm(e.n), 1.0, 1e-14);
        const Vec2 d = m.vertex(e.s) - m.vertex(e.e);
        EXPECT_NEAR(norm(d - e.length * e.t), 0.0, 1e-14);
        EXPECT_NEAR(dot(e.n, outward_normal(m, e.k_minus, f)), 1.0, 1e-12);
        if (e.interior()) {
            EXPECT_LT(e.k_minus, e.k_plus);
            EXPECT_NEAR(dot(e.n, outward_normal(m, e.k_plus, f)), -1.0, 1e-12);
        } else {
            EXPECT_EQ(e.k_plus, -1);
        }
    }
}

}  // namespace

TEST(Mesh, TwoTriangleSquareHasFiveEdges) {
    const Mesh m = unit_square_two();
    EXPECT_EQ(m.num_edges(), 5);
    int interior = 0;
    for (const auto &e : m.edges()) interior += e.interior();
    EXPECT_EQ(interior, 1);
    expect_consistent(m);
}

TEST(Mesh, ReferenceTriangleGeometry) {
    const Mesh m = build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}, 0}},
                              {{0, 1, BoundaryKind::Dirichlet}, {1, 2, BoundaryKind::Dirichlet},
                               {2, 0, BoundaryKind::Dirichlet}});
    EXPECT_DOUBLE_EQ(m.area(0), 0.5);
    // local edge 0 is opposite vertex 0: the hypotenuse
    EXPECT_NEAR(m.edge(m.triangle_edges(0)[0]).length, std::sqrt(2.0), 1e-15);
}

TEST(Mesh, CrissCrossAreaAndCounts) {
    const Mesh m = structured_mesh(1, 1, -1, 1, -1, 1, GridPattern::CrissCross);
    EXPECT_EQ(m.num_triangles(), 4);
    EXPECT_NEAR(m.total_area(), 4.0, 1e-12);
    const Mesh m2 = structured_mesh(2, 2, -1, 1, -1, 1, GridPattern::CrissCross);
    EXPECT_EQ(m2.num_triangles(), 16);
    EXPECT_NEAR(m2.total_area(), 4.0, 1e-12);
    expect_consistent(m2);
}

TEST(Mesh, ClockwiseInputIsReoriented) {
    const Mesh m = build_mesh({{0, 0}, {0, 1}, {1, 0}}, {{{0, 1, 2}, 0}},
                              {{0, 1, BoundaryKind::Dirichlet}, {1, 2, BoundaryKind::Dirichlet},
                               {2, 0, BoundaryKind::Dirichlet}});
    EXPECT_GT(m.area(0), 0.0);
    expect_consistent(m);
}

TEST(Mesh, RejectsBadInput) {
    const std::vector<BoundaryTag> tri_tags{{0, 1, BoundaryKind::Dirichlet}, {1, 2, BoundaryKind::Dirichlet},
                                            {2, 0, BoundaryKind::Dirichlet}};
    // degenerate
    EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {2, 0}}, {{{0, 1, 2}, 0}}, tri_tags), MeshError);
    // untagged boundary edge
    EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}, 0}},
                            {{0, 1, BoundaryKind::Dirichlet}, {1, 2, BoundaryKind::Dirichlet}}),
                 MeshError);
    // hanging node: vertex 3 sits on the edge (0,1) of the big triangle
    EXPECT_THROW(build_mesh({{0, 0}, {2, 0}, {0, 2}, {1, 0}, {1, -1}},
                            {{{0, 1, 2}, 0}, {{0, 4, 3}, 0}, {{3, 4, 1}, 0}},
                            {{1, 2, BoundaryKind::Dirichlet}, {2, 0, BoundaryKind::Dirichlet},
                             {0, 4, BoundaryKind::Dirichlet}, {4, 1, BoundaryKind::Dirichlet}}),
                 MeshError);
    // tag on an interior edge
    auto tags = std::vector<BoundaryTag>{{0, 1, BoundaryKind::Dirichlet}, {1, 2, BoundaryKind::Dirichlet},
                                         {2, 3, BoundaryKind::Dirichlet}, {3, 0, BoundaryKind::Dirichlet},
                                         {0, 2, BoundaryKind::Dirichlet}};
    EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0, 1, 2}, 0}, {{0, 2, 3}, 0}}, tags), MeshError);
    // non-finite coordinate
    EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {0, NAN}}, {{{0, 1, 2}, 0}}, tri_tags), MeshError);
}

TEST(Mesh, BuildIsDeterministic) {
    const Mesh a = structured_mesh(3, 2, 0, 1, 0, 1, GridPattern::CrissCross);
    const Mesh b = structured_mesh(3, 2, 0, 1, 0, 1, GridPattern::CrissCross);
    ASSERT_EQ(a.num_edges(), b.num_edges());
    for (int f = 0; f < a.num_edges(); ++f) {
        EXPECT_EQ(a.edge(f).s, b.edge(f).s);
        EXPECT_EQ(a.edge(f).e, b.edge(f).e);
        EXPECT_EQ(a.edge(f).k_minus, b.edge(f).k_minus);
    }
}

TEST(Mesh, EdgePatch) {
    const Mesh m = unit_square_two();
    for (int f = 0; f < m.num_edges(); ++f) {
        const auto p = edge_patch(m, f);
        EXPECT_EQ(p.size(), m.edge(f).interior() ? 2u : 1u);
        EXPECT_EQ(p[0], m.edge(f).k_minus);
    }
    EXPECT_THROW(edge_patch(m, 99), std::out_of_range);
}

TEST(Mesh, StaleEdgeHandleIsRejected) {
    const Mesh m = unit_square_two();
    const EdgeHandle h = m.handle(0);
    EXPECT_NO_THROW(edge_patch(m, h));
    const Mesh refined = bisect_all(m);
    EXPECT_THROW(edge_patch(refined, h), std::out_of_range);
}

TEST(Bisect, MarkOneOfTwoGivesFour) {
    const Mesh m = unit_square_two();
    const std::vector<int> marked{0};
    const Mesh r = bisect(m, marked);
    EXPECT_EQ(r.num_triangles(), 4);
    EXPECT_NEAR(r.total_area(), 1.0, 1e-14);
    expect_consistent(r);
}

TEST(Bisect, MarkAllSplitsEachOnce) {
    // refinement edges of the criss-cross mesh are the cell edges: compatible, no closure
    const Mesh m = structured_mesh(2, 2, 0, 1, 0, 1, GridPattern::CrissCross);
    const Mesh r = bisect_all(m);
    EXPECT_EQ(r.num_triangles(), 2 * m.num_triangles());
    expect_consistent(r);
}

TEST(Bisect, MarkNoneIsAnError) {
    const Mesh m = unit_square_two();
    EXPECT_THROW(bisect(m, std::vector<int>{}), MeshError);
    EXPECT_THROW(bisect(m, std::vector<int>{7}), MeshError);
}

TEST(Bisect, InheritsRegionsAndBoundaryKinds) {
    const Mesh m = structured_mesh(
        2, 2, 0, 1, 0, 1, GridPattern::Diagonal,
        [](const Vec2 &p) { return p.y >= 1.0 ? BoundaryKind::Neumann : BoundaryKind::Dirichlet; },
        [](const Vec2 &c) { return c.x < 0.5 ? 1 : 2; });
    Mesh r = m;
    for (int i = 0; i < 3; ++i) r = bisect_all(r);
    for (int k = 0; k < r.num_triangles(); ++k) EXPECT_EQ(r.triangle(k).region, r.centroid(k).x < 0.5 ? 1 : 2);
    for (const auto &e : r.edges()) {
        if (e.interior()) continue;
        const Vec2 mid = 0.5 * (r.vertex(e.s) + r.vertex(e.e));
        EXPECT_EQ(e.kind, mid.y >= 1.0 - 1e-14 ? EdgeKind::Neumann : EdgeKind::Dirichlet);
    }
}

TEST(Bisect, ShapeRegularityOverUniformRounds) {
    Mesh m = structured_mesh(2, 2, 0, 1, 0, 1, GridPattern::Diagonal);
    const double coarse = min_angle(m);
    for (int round = 0; round < 10; ++round) {
        m = bisect_all(m);
        EXPECT_GE(min_angle(m), 0.5 * coarse);
        EXPECT_EQ(euler_characteristic(m), 1);
    }
    EXPECT_NEAR(m.total_area(), 1.0, 1e-12);
}

TEST(Bisect, RandomLocalRefinementStaysConforming) {
    std::mt19937 rng(5);
    Mesh m = structured_mesh(3, 3, -1, 1, -1, 1, GridPattern::CrissCross);
    for (int round = 0; round < 12; ++round) {
        std::vector<int> marked;
        std::uniform_int_distribution<int> pick(0, m.num_triangles() - 1);
        for (int i = 0; i < 3; ++i) marked.push_back(pick(rng));
        m = bisect(m, marked);
        EXPECT_EQ(euler_characteristic(m), 1);
        EXPECT_NEAR(m.total_area(), 4.0, 1e-12);
    }
    expect_consistent(m);
}

TEST(MeshIO, RoundTrip) {
    const Mesh m = bisect_all(unit_square_two());
    const std::string text = mesh_to_string(m);
    EXPECT_EQ(text.substr(0, text.find('\n')), "vertices 5 triangles 4 boundary 4");
    const Mesh back = mesh_from_string(text);
    EXPECT_EQ(mesh_to_string(back), text);
}

TEST(MeshIO, RejectsMalformedFiles) {
    EXPECT_THROW(mesh_from_string("vertex 3 triangles 1 boundary 3\n"), MeshError);
    EXPECT_THROW(mesh_from_string("vertices 3 triangles 1 boundary 3\n0 0\n1 0\n"), MeshError);
    EXPECT_THROW(mesh_from_string("vertices 3 triangles 1 boundary 3\n0 0\n1 0\n0 1\n0 1 2 0\n0 1 D\n1 2 D\n2 0 X\n"),
                 MeshError);
}
