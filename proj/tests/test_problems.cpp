#include "fluxzz/adaptivity.hpp"
#include "fluxzz/problems.hpp"
#include "fluxzz/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fluxzz;

namespace {

constexpr double pi = std::numbers::pi;

Vec2 polar(double r, double t) { return {r * std::cos(t), r * std::sin(t)}; }

}  // namespace

TEST(Kellogg, ParameterTuplePassesTheGate) {
    const KelloggParams p;
    EXPECT_EQ(p.R, 161.4476387975881);
    EXPECT_LE(kellogg_interface_residual(p), kKelloggGateTolerance);
    EXPECT_NO_THROW(kellogg_problem(p));
}

TEST(Kellogg, TamperedTupleIsRejected) {
    KelloggParams p;
    p.sigma += 1e-3;
    EXPECT_GT(kellogg_interface_residual(p), kKelloggGateTolerance);
    EXPECT_THROW(kellogg_problem(p), std::invalid_argument);
    KelloggParams q;
    q.R *= 1.0 + 1e-6;
    EXPECT_THROW(kellogg_problem(q), std::invalid_argument);
}

TEST(Kellogg, VanishesAtTheOrigin) {
    const auto ex = kellogg_exact({});
    EXPECT_EQ(ex.value({0.0, 0.0}), 0.0);
    EXPECT_EQ(ex.gradient({0.0, 0.0}).x, 0.0);
    EXPECT_LT(std::abs(ex.value(polar(1e-30, 0.3))), std::abs(ex.value(polar(1e-3, 0.3))));
}

TEST(Kellogg, InterfaceConditionsHoldAlongTheAxes) {
    const KelloggParams p;
    const auto ex = kellogg_exact(p);
    const double eps = 1e-9;
    for (double r : {0.1, 0.5, 0.9}) {
        for (int q = 0; q < 4; ++q) {
            const double t = q * pi / 2.0;
            // quadrant before the ray (clockwise side) and after it
            const int before = (q + 3) % 4, after = q;
            const Vec2 xb = polar(r, t - eps), xa = polar(r, t + eps);
            EXPECT_NEAR(ex.value(xb), ex.value(xa), 1e-6);
            // normal flux: alpha grad u . e_theta
            const Vec2 et{-std::sin(t), std::cos(t)};
            const double fb = kellogg_alpha(p, before) * dot(ex.gradient(xb), et);
            const double fa = kellogg_alpha(p, after) * dot(ex.gradient(xa), et);
            EXPECT_NEAR(fb, fa, 1e-5 * (1.0 + std::abs(fa)));
        }
    }
}

TEST(Kellogg, SolvesTheHomogeneousEquationInEachQuadrant) {
    // div(alpha grad u) = alpha Laplace(u) = 0 away from the axes, by central differences
    const auto ex = kellogg_exact({});
    const double h = 1e-4;
    for (const Vec2 x : {polar(0.5, 0.3), polar(0.7, 2.0), polar(0.4, 3.5), polar(0.8, 5.6)}) {
        const double lap = (ex.value({x.x + h, x.y}) + ex.value({x.x - h, x.y}) + ex.value({x.x, x.y + h}) +
                            ex.value({x.x, x.y - h}) - 4.0 * ex.value(x)) /
                           (h * h);
        EXPECT_NEAR(lap, 0.0, 1e-4 * (1.0 + std::abs(ex.value(x))));
        // the analytic gradient matches differences of the value
        const Vec2 g = ex.gradient(x);
        EXPECT_NEAR(g.x, (ex.value({x.x + h, x.y}) - ex.value({x.x - h, x.y})) / (2 * h), 1e-6);
        EXPECT_NEAR(g.y, (ex.value({x.x, x.y + h}) - ex.value({x.x, x.y - h})) / (2 * h), 1e-6);
    }
}

TEST(Kellogg, MeshAndCoefficients) {
    const auto p = kellogg_problem();
    EXPECT_EQ(p.mesh.num_triangles(), 64);
    EXPECT_NEAR(p.mesh.total_area(), 4.0, 1e-12);
    const CoefficientField c(p.mesh, p.coefficients);
    for (int k = 0; k < p.mesh.num_triangles(); ++k) {
        const Vec2 g = p.mesh.centroid(k);
        EXPECT_EQ(c.A(k).xx, g.x * g.y > 0.0 ? KelloggParams{}.R : 1.0);
    }
}

TEST(Kellogg, AdaptiveRefinementBeatsUniform) {
    const auto p = kellogg_problem();
    // uniform: error ~ dof^{-gamma/2}
    std::vector<double> dof, err;
    Mesh m = p.mesh;
    for (int level = 0; level < 4; ++level) {
        const SolvedState s = solve_state(p, m);
        dof.push_back(count_free_vertices(m));
        err.push_back(energy_error(s.solution, p.exact->gradient, s.coeff, 10, p.exact->singular_points));
        m = bisect_all(bisect_all(m));
    }
    const double uniform = log_log_slope(dof, err);
    AmrConfig cfg;
    cfg.max_dof = 3000;
    const auto r = amr_loop(p, cfg);
    const double adaptive = r.records.back().slope;
    EXPECT_LT(uniform, 0.0);
    EXPECT_GT(uniform, -0.1);
    EXPECT_LE(adaptive, 3.0 * uniform);
}

TEST(Counterexample, ExactSolutionIsInTheFiniteElementSpace) {
    const auto p = counterexample_2d(100.0);
    const SolvedState s = solve_state(p, p.mesh);
    for (int v = 0; v < s.mesh->num_vertices(); ++v)
        EXPECT_NEAR(s.solution.u[v], p.exact->value(s.mesh->vertex(v)), 1e-9);
    // normal flux across y = 0 is continuous: -k * 1 above, -1 * k below
    for (int f = 0; f < s.mesh->num_edges(); ++f)
        if (s.mesh->edge(f).interior()) {
            EXPECT_NEAR(s.flux.minus[f], s.flux.plus[f], 1e-8);
        }
}

TEST(Counterexample, ArgumentChecks) {
    EXPECT_THROW(counterexample_2d(0.5), std::invalid_argument);
    EXPECT_THROW(counterexample_2d(10.0, 7), std::invalid_argument);
    const auto one = counterexample_2d(1.0);
    for (const auto &t : one.mesh.triangles()) EXPECT_EQ(t.region, 1);
}

TEST(Problems, MisalignedMeshIsRejected) {
    auto p = counterexample_2d(10.0);
    // odd cell count puts y = 0 through the middle of a row of cells
    const Mesh bad = structured_mesh(3, 3, -1.0, 1.0, -1.0, 1.0, GridPattern::Diagonal,
                                     [](const Vec2 &) { return BoundaryKind::Dirichlet; },
                                     [](const Vec2 &c) { return c.y > 0.0 ? 1 : 2; });
    const auto mesh = std::make_shared<const Mesh>(bad);
    const CoefficientField coeff(bad, p.coefficients);
    EXPECT_THROW(solve_problem(p, mesh, coeff), MeshError);
}

TEST(Problems, SmoothSource) {
    const auto p = smooth_problem();
    EXPECT_NEAR(p.source({0.5, 0.5}), 2.0 * pi * pi, 1e-12);
    // -Laplace u = f by central differences
    const double h = 1e-4;
    const Vec2 x{0.3, 0.6};
    const auto u = p.exact->value;
    const double lap =
        (u({x.x + h, x.y}) + u({x.x - h, x.y}) + u({x.x, x.y + h}) + u({x.x, x.y - h}) - 4.0 * u(x)) / (h * h);
    EXPECT_NEAR(-lap, p.source(x), 1e-5 * p.source(x));
}

TEST(Problems, StripSolutionIsExact) {
    const auto p = strip_problem(10.0);
    const SolvedState s = solve_state(p, p.mesh);
    EXPECT_LE(energy_error(s.solution, p.exact->gradient, s.coeff, 4), 1e-9);
}

TEST(Problems, LookupByName) {
    EXPECT_EQ(problem_by_name("kellogg").name, "kellogg");
    EXPECT_EQ(problem_by_name("smooth").name, "smooth");
    EXPECT_EQ(problem_by_name("counterexample2d").coefficients.at(1).xx, 100.0);
    EXPECT_EQ(problem_by_name("counterexample2d:k=3").coefficients.at(1).xx, 3.0);
    EXPECT_EQ(problem_by_name("strip:k=4").coefficients.at(2).xx, 4.0);
    EXPECT_THROW(problem_by_name("lshape"), std::invalid_argument);
    EXPECT_THROW(problem_by_name("strip:q=4"), std::invalid_argument);
}
