#pragma once

// Quadrature on triangles.
//
// Rules are stored in barycentric form with weights normalized to sum to one, so
// that  integral_K f  ~=  |K| * sum_q w_q f(x_q).

#include "fluxzz/geometry.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fluxzz {

struct QuadPoint {
    std::array<double, 3> bary;
    double weight;
};

using TriangleRule = std::vector<QuadPoint>;

namespace detail {

template <std::size_t N>
std::vector<std::pair<double, double>> gauss_legendre_unit() {
    // Boost stores the non-negative half of the symmetric rule on [-1, 1].
    using G = boost::math::quadrature::gauss<double, N>;
    const auto &x = G::abscissa();
    const auto &w = G::weights();
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            out.emplace_back(0.5, 0.5 * w[i]);
        } else {
            out.emplace_back(0.5 * (1.0 - x[i]), 0.5 * w[i]);
            out.emplace_back(0.5 * (1.0 + x[i]), 0.5 * w[i]);
        }
    }
    return out;
}

template <std::size_t... Ns>
std::vector<std::pair<double, double>> gauss_legendre_dispatch(std::size_t n, std::index_sequence<Ns...>) {
    std::vector<std::pair<double, double>> out;
    ((n == Ns + 1 ? (out = gauss_legendre_unit<Ns + 1>(), true) : false) || ...);
    return out;
}

}  // namespace detail

inline constexpr std::size_t kMaxGaussPoints = 24;

/// Gauss-Legendre nodes and weights on [0, 1], 1 <= n <= kMaxGaussPoints.
inline std::vector<std::pair<double, double>> gauss_legendre_01(std::size_t n) {
    if (n < 1 || n > kMaxGaussPoints) throw std::invalid_argument("gauss_legendre_01: unsupported point count");
    return detail::gauss_legendre_dispatch(n, std::make_index_sequence<kMaxGaussPoints>{});
}

/// Collapsed (Duffy) tensor Gauss rule with n points per direction; the collapsed
/// vertex is barycentric vertex 0. radial_power p maps u = s^p, which removes
/// r^(a) singularities at vertex 0 when p * (a + 2) is a positive integer.
inline TriangleRule collapsed_gauss_rule(std::size_t n, int radial_power = 1) {
    const auto g = gauss_legendre_01(n);
    TriangleRule rule;
    rule.reserve(n * n);
    for (const auto &[s, ws] : g) {
        const double u = std::pow(s, radial_power);
        const double du = radial_power * std::pow(s, radial_power - 1);
        for (const auto &[w, ww] : g) {
            // x = v0 + u ((1 - w)(v1 - v0) + w (v2 - v0)), Jacobian 2|K| u
            rule.push_back({{1.0 - u, u * (1.0 - w), u * w}, 2.0 * u * du * ws * ww});
        }
    }
    return rule;
}

/// Symmetric rule exact for polynomials of total degree <= order.
/// Orders 1, 2 and 4 use the classical 1-, 3- and 6-point rules; higher orders use
/// collapsed Gauss rules.
inline TriangleRule triangle_rule(int order) {
    switch (order) {
    case 0:
    case 1:
        return {{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0}};
    case 2:
        return {{{2.0 / 3, 1.0 / 6, 1.0 / 6}, 1.0 / 3},
                {{1.0 / 6, 2.0 / 3, 1.0 / 6}, 1.0 / 3},
                {{1.0 / 6, 1.0 / 6, 2.0 / 3}, 1.0 / 3}};
    case 3:
    case 4: {
        constexpr double a1 = 0.44594849091596488632, w1 = 0.22338158967801146570;
        constexpr double a2 = 0.091576213509770743460, w2 = 0.10995174365532186764;
        constexpr double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
        return {{{a1, a1, b1}, w1}, {{a1, b1, a1}, w1}, {{b1, a1, a1}, w1},
                {{a2, a2, b2}, w2}, {{a2, b2, a2}, w2}, {{b2, a2, a2}, w2}};
    }
    default:
        if (order < 0 || order > 2 * static_cast<int>(kMaxGaussPoints) - 3)
            throw std::invalid_argument("triangle_rule: unsupported order " + std::to_string(order));
        // degree d in x needs 2n - 1 >= d + 1 in the collapsed direction
        return collapsed_gauss_rule(static_cast<std::size_t>(order + 3) / 2);
    }
}

inline Vec2 map_point(const std::array<Vec2, 3> &tri, const std::array<double, 3> &bary) {
    return bary[0] * tri[0] + bary[1] * tri[1] + bary[2] * tri[2];
}

/// Integrate f over the triangle with the given rule.
template <typename F>
auto integrate(const std::array<Vec2, 3> &tri, const TriangleRule &rule, F &&f) {
    const double area = std::abs(signed_area(tri[0], tri[1], tri[2]));
    using R = decltype(f(Vec2{}));
    R acc{};
    for (const auto &q : rule) acc += (q.weight * area) * f(map_point(tri, q.bary));
    return acc;
}

/// Geometric grading toward a singular vertex.
/// The defaults integrate r^{-1.8} (a gradient singularity r^{-0.9}, squared) to about 1e-11.
struct GradedRuleConfig {
    int levels = 20;
    double ratio = 0.5;
    int base_order = 24;
    std::size_t core_points = 20;
    int core_radial_power = 5;
};

/// Integrate f over tri with geometric refinement toward tri[singular_vertex].
/// Each level splits off the trapezoid between distance fractions ratio^(l+1) and
/// ratio^l; the remaining core triangle uses a radially graded collapsed rule.
template <typename F>
double integrate_graded(const std::array<Vec2, 3> &tri, int singular_vertex, F &&f,
                        const GradedRuleConfig &cfg = {}) {
    const Vec2 z = tri[singular_vertex];
    Vec2 a = tri[(singular_vertex + 1) % 3];
    Vec2 b = tri[(singular_vertex + 2) % 3];
    const TriangleRule base = triangle_rule(cfg.base_order);
    double acc = 0.0;
    for (int l = 0; l < cfg.levels; ++l) {
        const Vec2 ai = z + cfg.ratio * (a - z);
        const Vec2 bi = z + cfg.ratio * (b - z);
        acc += integrate(std::array<Vec2, 3>{ai, a, b}, base, f);
        acc += integrate(std::array<Vec2, 3>{ai, b, bi}, base, f);
        a = ai;
        b = bi;
    }
    acc += integrate(std::array<Vec2, 3>{z, a, b}, collapsed_gauss_rule(cfg.core_points, cfg.core_radial_power), f);
    return acc;
}

}  // namespace fluxzz
