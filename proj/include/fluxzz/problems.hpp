#pragma once

// Built-in benchmark problems.

#include "fluxzz/format.hpp"
#include "fluxzz/geometry.hpp"
#include "fluxzz/mesh.hpp"
#include "fluxzz/problem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fluxzz {

// ---------------------------------------------------------------------------
// Interface alignment

/// Straight coefficient interface {x : normal . x = offset}.
struct InterfaceLine {
    Vec2 normal;
    double offset;
};

/// Throws MeshError if a triangle has vertices strictly on both sides of a line.
inline void require_aligned(const Mesh &mesh, std::span<const InterfaceLine> lines) {
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const double tol = 1e-12 * mesh.diameter(k);
        for (const auto &line : lines) {
            bool neg = false, pos = false;
            for (const auto &c : mesh.corners(k)) {
                const double d = dot(line.normal, c) - line.offset;
                neg = neg || d < -tol;
                pos = pos || d > tol;
            }
            if (neg && pos)
                throw MeshError("triangle " + std::to_string(k) + " is cut by a coefficient interface");
        }
    }
}

// ---------------------------------------------------------------------------
// Kellogg checkerboard problem

struct KelloggParams {
    double gamma = 0.1;
    double R = 161.4476387975881;
    double rho = std::numbers::pi / 4.0;
    double sigma = -14.9225651045515;
};

/// Coefficient of the quadrant containing angle theta (quadrant index 0..3).
inline double kellogg_alpha(const KelloggParams &p, int quadrant) { return quadrant % 2 == 0 ? p.R : 1.0; }

/// mu and mu' on branch q (0..3) at angle theta; the branch formula is evaluated as is,
/// so theta may sit on either end of the branch interval.
inline std::pair<double, double> kellogg_mu_branch(const KelloggParams &p, int q, double theta) {
    constexpr double pi = std::numbers::pi;
    const double g = p.gamma;
    double amp = 0.0, shift = 0.0;
    switch (q) {
    case 0:
        amp = std::cos((pi / 2.0 - p.sigma) * g);
        shift = -pi / 2.0 + p.rho;
        break;
    case 1:
        amp = std::cos(p.rho * g);
        shift = -pi + p.sigma;
        break;
    case 2:
        amp = std::cos(p.sigma * g);
        shift = -pi - p.rho;
        break;
    case 3:
        amp = std::cos((pi / 2.0 - p.rho) * g);
        shift = -1.5 * pi - p.sigma;
        break;
    default:
        throw std::out_of_range("kellogg_mu_branch: quadrant must be 0..3");
    }
    const double arg = (theta + shift) * g;
    return {amp * std::cos(arg), -amp * g * std::sin(arg)};
}

inline int kellogg_quadrant(double theta) {
    const int q = static_cast<int>(std::floor(theta / (std::numbers::pi / 2.0)));
    return std::clamp(q, 0, 3);
}

/// Angle in [0, 2 pi).
inline double polar_angle(const Vec2 &x) {
    double t = std::atan2(x.y, x.x);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    return t;
}

/// Largest violation of continuity of mu and of alpha mu' across the four quadrant rays.
inline double kellogg_interface_residual(const KelloggParams &p) {
    constexpr double pi = std::numbers::pi;
    double worst = 0.0;
    for (int q = 0; q < 4; ++q) {
        // ray between branch q and branch q+1 (mod 4) sits at angle (q+1) pi/2
        const int next = (q + 1) % 4;
        const double theta_left = (q + 1) * pi / 2.0;
        const double theta_right = next == 0 ? 0.0 : theta_left;
        const auto [mu_l, dmu_l] = kellogg_mu_branch(p, q, theta_left);
        const auto [mu_r, dmu_r] = kellogg_mu_branch(p, next, theta_right);
        worst = std::max(worst, std::abs(mu_l - mu_r));
        worst = std::max(worst, std::abs(kellogg_alpha(p, q) * dmu_l - kellogg_alpha(p, next) * dmu_r));
    }
    return worst;
}

inline constexpr double kKelloggGateTolerance = 1e-9;

inline ExactSolution kellogg_exact(const KelloggParams &p) {
    ExactSolution ex;
    ex.value = [p](const Vec2 &x) {
        const double r = norm(x);
        if (r == 0.0) return 0.0;
        const double t = polar_angle(x);
        return std::pow(r, p.gamma) * kellogg_mu_branch(p, kellogg_quadrant(t), t).first;
    };
    ex.gradient = [p](const Vec2 &x) {
        const double r = norm(x);
        if (r == 0.0) return Vec2{0.0, 0.0};
        const double t = polar_angle(x);
        const auto [mu, dmu] = kellogg_mu_branch(p, kellogg_quadrant(t), t);
        const double rp = std::pow(r, p.gamma - 1.0);
        const Vec2 er{std::cos(t), std::sin(t)}, et{-std::sin(t), std::cos(t)};
        return (p.gamma * rp * mu) * er + (rp * dmu) * et;
    };
    ex.singular_points = {{0.0, 0.0}};
    return ex;
}

/// Regions: 1..4 for quadrants I..IV.
inline int quadrant_region(const Vec2 &c) {
    if (c.x > 0.0) return c.y > 0.0 ? 1 : 4;
    return c.y > 0.0 ? 2 : 3;
}

inline ProblemSpec kellogg_problem(const KelloggParams &p = {}) {
    if (p.gamma != 0.1) throw std::invalid_argument("kellogg_problem: only gamma = 0.1 is supported");
    const double res = kellogg_interface_residual(p);
    if (!(res <= kKelloggGateTolerance))
        throw std::invalid_argument("kellogg_problem: parameter tuple fails the interface conditions (residual " +
                                    format_real(res) + ")");
    ProblemSpec spec;
    spec.name = "kellogg";
    spec.mesh = structured_mesh(
        4, 4, -1.0, 1.0, -1.0, 1.0, GridPattern::CrissCross, [](const Vec2 &) { return BoundaryKind::Dirichlet; },
        quadrant_region);
    spec.coefficients = {{1, Sym2::scalar(p.R)}, {2, Sym2::identity()}, {3, Sym2::scalar(p.R)}, {4, Sym2::identity()}};
    spec.exact = kellogg_exact(p);
    spec.boundary.dirichlet = spec.exact->value;
    spec.validate_mesh = [](const Mesh &m) {
        const std::array<InterfaceLine, 2> lines{InterfaceLine{{1.0, 0.0}, 0.0}, InterfaceLine{{0.0, 1.0}, 0.0}};
        require_aligned(m, lines);
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Piecewise affine interface problem: A = kI above y = 0, I below.

inline ProblemSpec counterexample_2d(double k, int n = 8) {
    if (!(k >= 1.0) || !std::isfinite(k)) throw std::invalid_argument("counterexample_2d: need finite k >= 1");
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("counterexample_2d: n must be even so y = 0 is a grid line");
    const bool single = k == 1.0;
    ProblemSpec spec;
    spec.name = "counterexample2d:k=" + format_real(k);
    spec.mesh = structured_mesh(
        n, n, -1.0, 1.0, -1.0, 1.0, GridPattern::Diagonal, [](const Vec2 &) { return BoundaryKind::Dirichlet; },
        [single](const Vec2 &c) { return single || c.y > 0.0 ? 1 : 2; });
    spec.coefficients = {{1, Sym2::scalar(k)}, {2, Sym2::identity()}};
    ExactSolution ex;
    ex.value = [k](const Vec2 &x) { return x.y > 0.0 ? x.x + x.y : x.x + k * x.y; };
    ex.gradient = [k](const Vec2 &x) { return x.y > 0.0 ? Vec2{1.0, 1.0} : Vec2{1.0, k}; };
    spec.exact = ex;
    spec.boundary.dirichlet = ex.value;
    spec.validate_mesh = [](const Mesh &m) {
        const std::array<InterfaceLine, 1> lines{InterfaceLine{{0.0, 1.0}, 0.0}};
        require_aligned(m, lines);
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Smooth problem u = sin(pi x) sin(pi y) on the unit square.

inline ProblemSpec smooth_problem(int n = 4) {
    constexpr double pi = std::numbers::pi;
    ProblemSpec spec;
    spec.name = "smooth";
    spec.mesh = structured_mesh(n, n, 0.0, 1.0, 0.0, 1.0);
    spec.coefficients = {{0, Sym2::identity()}};
    spec.source = [](const Vec2 &x) { return 2.0 * pi * pi * std::sin(pi * x.x) * std::sin(pi * x.y); };
    ExactSolution ex;
    ex.value = [](const Vec2 &x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
    ex.gradient = [](const Vec2 &x) {
        return Vec2{pi * std::cos(pi * x.x) * std::sin(pi * x.y), pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
    };
    spec.exact = ex;
    return spec;
}

// ---------------------------------------------------------------------------
// Layered strip: A = 1 for x < 1/2, k for x > 1/2, insulated top and bottom.
// The solution depends on x only and is continuous piecewise linear.

inline ProblemSpec strip_problem(double k, int nx = 8, int ny = 4) {
    if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("strip_problem: need finite k > 0");
    if (nx < 2 || nx % 2 != 0) throw std::invalid_argument("strip_problem: nx must be even");
    if (ny < 1) throw std::invalid_argument("strip_problem: ny must be positive");
    const double height = static_cast<double>(ny) / nx;
    ProblemSpec spec;
    spec.name = "strip:k=" + format_real(k);
    spec.mesh = structured_mesh(
        nx, ny, 0.0, 1.0, 0.0, height, GridPattern::Diagonal,
        [](const Vec2 &m) {
            return (m.x <= 0.0 || m.x >= 1.0) ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
        },
        [](const Vec2 &c) { return c.x < 0.5 ? 1 : 2; });
    spec.coefficients = {{1, Sym2::identity()}, {2, Sym2::scalar(k)}};
    ExactSolution ex;
    ex.value = [k](const Vec2 &x) { return x.x < 0.5 ? k * x.x : x.x + 0.5 * (k - 1.0); };
    ex.gradient = [k](const Vec2 &x) { return x.x < 0.5 ? Vec2{k, 0.0} : Vec2{1.0, 0.0}; };
    spec.exact = ex;
    spec.boundary.dirichlet = ex.value;
    spec.validate_mesh = [](const Mesh &m) {
        const std::array<InterfaceLine, 1> lines{InterfaceLine{{1.0, 0.0}, 0.5}};
        require_aligned(m, lines);
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Lookup by name: "kellogg", "smooth", "counterexample2d[:k=<real>]", "strip[:k=<real>]".

inline ProblemSpec problem_by_name(std::string_view name) {
    auto parameter = [&](std::string_view base, double fallback) {
        const std::string_view rest = name.substr(base.size());
        if (rest.empty()) return fallback;
        if (!rest.starts_with(":k=")) throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
        return parse_real(rest.substr(3));
    };
    if (name == "kellogg") return kellogg_problem();
    if (name == "smooth") return smooth_problem();
    if (name.starts_with("counterexample2d")) return counterexample_2d(parameter("counterexample2d", 100.0));
    if (name.starts_with("strip")) return strip_problem(parameter("strip", 10.0));
    throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
}

}  // namespace fluxzz
