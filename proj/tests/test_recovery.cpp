#include "fluxzz/basis.hpp"
#include "fluxzz/recovery.hpp"
#include "fluxzz/verify.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fluxzz;

namespace {

Mesh reference_triangle() {
    return build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}, 0}},
                      {{0, 1, BoundaryKind::Dirichlet}, {1, 2, BoundaryKind::Dirichlet},
                       {2, 0, BoundaryKind::Dirichlet}});
}

int edge_between(const Mesh &m, int a, int b) {
    for (int f = 0; f < m.num_edges(); ++f)
        if (edge_key(m.edge(f).s, m.edge(f).e) == edge_key(a, b)) return f;
    return -1;
}

}  // namespace

TEST(Recovery, ReferenceTriangleGamma) {
    const Mesh m = reference_triangle();
    const CoefficientField coeff(m, {{0, Sym2::identity()}});
    const int hyp = edge_between(m, 1, 2);
    EXPECT_NEAR(gamma_on(m, coeff, 0, hyp), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(gamma_quadrature(m, coeff, 0, hyp), 1.0 / 6.0, 1e-14);
    // legs: (1 + 0 + 2 + 5) / 24
    EXPECT_NEAR(gamma_on(m, coeff, 0, edge_between(m, 0, 1)), 1.0 / 3.0, 1e-15);
    // A = 2I halves A^{-1}
    const CoefficientField two(m, {{0, Sym2::scalar(2.0)}});
    EXPECT_NEAR(gamma_on(m, two, 0, hyp), 1.0 / 12.0, 1e-15);
}

TEST(Recovery, BetaSumsToGamma) {
    // psi_s + psi_e = phi_F, so ss + 2 se + ee = gamma
    const Mesh m = reference_triangle();
    const CoefficientField coeff(m, {{0, Sym2{1.3, 0.2, 0.6}}});
    for (int f = 0; f < 3; ++f) {
        const auto b = beta_on(m, coeff, 0, f);
        EXPECT_NEAR(b.ss + 2.0 * b.se + b.ee, gamma_on(m, coeff, 0, f), 1e-14);
    }
}

TEST(Recovery, RecoveredFluxIsNormalContinuous) {
    const ProblemSpec p = random_tensor_problem(3);
    const SolvedState s = solve_state(p, p.mesh);
    const double scale = flux_energy(*s.mesh, s.coeff, s.flux);
    for (const FluxSpace sp : {FluxSpace::RT, FluxSpace::BDM}) {
        const auto rf = recover(sp, *s.mesh, s.coeff, s.flux, s.gn);
        EXPECT_LE(normal_continuity_defect(*s.mesh, rf, scale), 1e-12);
    }
}

TEST(Recovery, BoundaryDofsMatchData) {
    const ProblemSpec p = random_tensor_problem(4);
    const SolvedState s = solve_state(p, p.mesh);
    const auto rf = recover(FluxSpace::BDM, *s.mesh, s.coeff, s.flux, s.gn);
    for (int f = 0; f < s.mesh->num_edges(); ++f) {
        const auto &e = s.mesh->edge(f);
        if (e.kind == EdgeKind::Neumann) {
            EXPECT_EQ(rf.dofs[f][0], s.gn[f]);
            EXPECT_EQ(rf.dofs[f][1], s.gn[f]);
        } else if (e.kind == EdgeKind::Dirichlet) {
            EXPECT_EQ(rf.dofs[f][0], s.flux.minus[f]);
        }
    }
}

TEST(Recovery, LocalDofsAreOptimal) {
    const ProblemSpec p = random_tensor_problem(5);
    const SolvedState s = solve_state(p, p.mesh);
    const Mesh &m = *s.mesh;
    const auto rt = recover(FluxSpace::RT, m, s.coeff, s.flux, s.gn);
    const auto bdm = recover(FluxSpace::BDM, m, s.coeff, s.flux, s.gn);
    std::mt19937 rng(1);
    std::normal_distribution<double> d(0.0, 0.1);
    for (int f = 0; f < m.num_edges(); ++f) {
        if (!m.edge(f).interior()) continue;
        const double c = rt.dofs[f][0];
        EXPECT_NEAR(c, local_rt_solve(m, s.coeff, s.flux, f), 1e-10 * (1.0 + std::abs(c)));
        const double best_rt = edge_objective(m, s.coeff, s.flux, f, c, c);
        const auto [bs, be] = bdm.dofs[f];
        const double best_bdm = edge_objective(m, s.coeff, s.flux, f, bs, be);
        EXPECT_LE(best_bdm, best_rt * (1.0 + 1e-12));
        for (int trial = 0; trial < 5; ++trial) {
            const double dc = d(rng), de = d(rng);
            EXPECT_GE(edge_objective(m, s.coeff, s.flux, f, c + dc, c + dc), best_rt * (1.0 - 1e-12));
            EXPECT_GE(edge_objective(m, s.coeff, s.flux, f, bs + dc, be + de), best_bdm * (1.0 - 1e-12));
        }
    }
}

TEST(Recovery, WeightIsHalfForSymmetricPatch) {
    // two congruent triangles and equal coefficients: a_F = 1/2 and b_s = b_e = 1/2
    const Mesh m = build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0, 1, 2}, 0}, {{0, 2, 3}, 0}},
                              {{0, 1, BoundaryKind::Dirichlet}, {1, 2, BoundaryKind::Dirichlet},
                               {2, 3, BoundaryKind::Dirichlet}, {3, 0, BoundaryKind::Dirichlet}});
    const CoefficientField coeff(m, {{0, Sym2::identity()}});
    const int f = edge_between(m, 0, 2);
    EXPECT_NEAR(rt_weight(gamma_coeffs(m, coeff, f)), 0.5, 1e-15);
    const auto w = bdm_weights(beta_coeffs(m, coeff, f));
    EXPECT_NEAR(w.s, 0.5, 1e-14);
    EXPECT_NEAR(w.e, 0.5, 1e-14);
}

TEST(Recovery, GlobalProjectionIsConformingAndNoWorseThanLocal) {
    const ProblemSpec p = random_tensor_problem(6);
    const SolvedState s = solve_state(p, p.mesh);
    const Mesh &m = *s.mesh;
    const double scale = flux_energy(m, s.coeff, s.flux);
    for (const FluxSpace sp : {FluxSpace::RT, FluxSpace::BDM}) {
        const auto g = global_recover(m, s.coeff, s.flux, s.gn, sp);
        EXPECT_LE(normal_continuity_defect(m, g.flux, scale), 1e-10);
        for (int f = 0; f < m.num_edges(); ++f)
            if (m.edge(f).kind == EdgeKind::Neumann) {
                EXPECT_NEAR(g.flux.dofs[f][0], s.gn[f], 1e-14);
            }
        const double global = recovery_distance(m, g.flux, s.solution, s.flux, s.coeff);
        const double local = recovery_distance(m, recover(sp, m, s.coeff, s.flux, s.gn), s.solution, s.flux, s.coeff);
        EXPECT_LE(global, local * (1.0 + 1e-10));
    }
}

TEST(Basis, DualityAndSumIdentities) {
    const auto [dual, sum] = basis_identity_errors(100);
    EXPECT_LE(dual, 1e-12);
    EXPECT_LE(sum, 1e-12);
}

TEST(Basis, GeometricAndBarycentricRtAgree) {
    const Mesh m = structured_mesh(2, 2, 0.0, 1.0, 0.0, 1.0, GridPattern::CrissCross);
    for (int k = 0; k < m.num_triangles(); ++k) {
        const auto c = m.corners(k);
        const std::array<double, 3> bary{0.2, 0.3, 0.5};
        const Vec2 x = map_point(c, bary);
        for (int f : m.triangle_edges(k)) {
            const Vec2 a = rt_basis(m, k, f, bary), b = rt_basis_geometric(m, k, f, x);
            EXPECT_NEAR(a.x, b.x, 1e-12);
            EXPECT_NEAR(a.y, b.y, 1e-12);
        }
    }
}
