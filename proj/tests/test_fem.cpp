#include "fluxzz/fem.hpp"
#include "fluxzz/problems.hpp"
#include "fluxzz/refine.hpp"
#include "fluxzz/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fluxzz;

namespace {

ProblemSpec affine_problem(const Sym2 &A) {
    ProblemSpec p;
    p.name = "affine";
    p.mesh = structured_mesh(3, 3, 0.0, 1.0, 0.0, 1.0, GridPattern::CrissCross);
    p.coefficients = {{0, A}};
    p.boundary.dirichlet = [](const Vec2 &x) { return 1.0 + 2.0 * x.x - 3.0 * x.y; };
    return p;
}

}  // namespace

TEST(Fem, PatchTestReproducesAffineSolutions) {
    const Sym2 A{2.0, 0.3, 0.7};
    const ProblemSpec p = affine_problem(A);
    const SolvedState s = solve_state(p, p.mesh);
    for (int v = 0; v < s.mesh->num_vertices(); ++v)
        EXPECT_NEAR(s.solution.u[v], p.boundary.dirichlet(s.mesh->vertex(v)), 1e-11);
    for (int k = 0; k < s.mesh->num_triangles(); ++k) {
        const Vec2 g = s.solution.gradient(k);
        EXPECT_NEAR(g.x, 2.0, 1e-10);
        EXPECT_NEAR(g.y, -3.0, 1e-10);
        // flux is -A grad u and is continuous, so every jump vanishes
        EXPECT_NEAR(s.flux.sigma[k].x, -(A * Vec2{2.0, -3.0}).x, 1e-10);
    }
}

TEST(Fem, StiffnessRowsSumToZeroAndMatrixIsSymmetric) {
    const Mesh m = structured_mesh(3, 2, 0.0, 2.0, 0.0, 1.0, GridPattern::CrissCross);
    const CoefficientField coeff(m, {{0, Sym2{1.5, -0.4, 0.9}}});
    const Eigen::MatrixXd K = Eigen::MatrixXd(assemble_stiffness(m, coeff));
    for (int i = 0; i < K.rows(); ++i) EXPECT_NEAR(K.row(i).sum(), 0.0, 1e-13);
    EXPECT_NEAR((K - K.transpose()).norm(), 0.0, 1e-14);
}

TEST(Fem, GalerkinOrthogonality) {
    // a(u - u_T, v_T) = 0: with a hat function v at a free vertex this is the residual of the
    // discrete equation, computed against an independent dense assembly
    const ProblemSpec p = random_tensor_problem(11);
    const SolvedState s = solve_state(p, bisect_all(p.mesh));
    const Mesh &m = *s.mesh;
    const auto K = Eigen::MatrixXd(assemble_stiffness(m, s.coeff));
    const auto b = assemble_load(m, p.source, s.gn);
    const Eigen::Map<const Eigen::VectorXd> u(s.solution.u.data(), m.num_vertices());
    const Eigen::VectorXd r = K * u - b;
    const auto dir = m.dirichlet_vertices();
    for (int v = 0; v < m.num_vertices(); ++v)
        if (!dir[v]) {
            EXPECT_NEAR(r[v], 0.0, 1e-9 * b.cwiseAbs().maxCoeff());
        }
}

TEST(Fem, SmoothProblemConvergesAtFirstOrder) {
    const ProblemSpec p = smooth_problem(4);
    Mesh m = p.mesh;
    std::vector<double> errors;
    for (int level = 0; level < 3; ++level) {
        const SolvedState s = solve_state(p, m);
        errors.push_back(energy_error(s.solution, p.exact->gradient, s.coeff, 10));
        m = bisect_all(bisect_all(m));  // h halves every two bisections
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const double ratio = errors[i] / errors[i - 1];
        EXPECT_GT(ratio, 0.45);
        EXPECT_LT(ratio, 0.55);
    }
}

TEST(Fem, EnergyNormOfSmoothSolution) {
    const ProblemSpec p = smooth_problem(8);
    const CoefficientField coeff(p.mesh, p.coefficients);
    // ||grad sin(pi x) sin(pi y)||^2 = pi^2 / 2
    EXPECT_NEAR(energy_norm(p.mesh, p.exact->gradient, coeff, 10), std::numbers::pi / std::sqrt(2.0), 1e-10);
}

TEST(Fem, NoDirichletBoundaryIsRejected) {
    ProblemSpec p;
    p.mesh = structured_mesh(
        2, 2, 0.0, 1.0, 0.0, 1.0, GridPattern::Diagonal, [](const Vec2 &) { return BoundaryKind::Neumann; },
        [](const Vec2 &) { return 0; });
    p.coefficients = {{0, Sym2::identity()}};
    const auto mesh = std::make_shared<const Mesh>(p.mesh);
    const CoefficientField coeff(*mesh, p.coefficients);
    EXPECT_THROW(solve_problem(p, mesh, coeff), std::invalid_argument);
}

TEST(Fem, MissingOrIndefiniteCoefficientIsRejected) {
    const Mesh m = structured_mesh(2, 2, 0.0, 1.0, 0.0, 1.0);
    EXPECT_THROW(CoefficientField(m, {{7, Sym2::identity()}}), std::invalid_argument);
    EXPECT_THROW(CoefficientField(m, {{0, Sym2{1.0, 2.0, 1.0}}}), std::invalid_argument);
}

TEST(Fem, SolverFailureRaisesNumericalError) {
    const ProblemSpec p = smooth_problem(8);
    const auto mesh = std::make_shared<const Mesh>(p.mesh);
    const CoefficientField coeff(*mesh, p.coefficients);
    const auto sys = assemble(mesh, coeff, p.source, p.boundary);
    EXPECT_THROW(solve(sys, 1e-14, 1), NumericalError);
}

TEST(Fem, GradedQuadratureIntegratesSingularFunction) {
    // integral over the reference triangle of r^{-1.8}, r = |x|: int_0^{pi/2} int_0^{1/(cos t + sin t)} r^{-0.8}
    const std::array<Vec2, 3> tri{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    const double graded = integrate_graded(tri, 0, [](const Vec2 &x) { return std::pow(norm(x), -1.8); });
    // reference value by 1D Gauss-Legendre in the angle of the closed-form radial integral
    double ref = 0.0;
    for (const auto &[t, w] : gauss_legendre_01(24)) {
        const double th = 0.5 * std::numbers::pi * t;
        ref += 0.5 * std::numbers::pi * w * std::pow(1.0 / (std::cos(th) + std::sin(th)), 0.2) / 0.2;
    }
    EXPECT_NEAR(graded, ref, 1e-9 * ref);
}
