#pragma once

// Small fixed-size 2D vector and symmetric-matrix helpers used throughout the library.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fluxzz {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 &operator+=(const Vec2 &o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2 &operator-=(const Vec2 &o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2 &operator*=(double s) { x *= s; y *= s; return *this; }
};

constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
constexpr Vec2 operator-(const Vec2 &a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
constexpr bool operator==(const Vec2 &a, const Vec2 &b) { return a.x == b.x && a.y == b.y; }

constexpr double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }

/// Rotation by +90 degrees: (x, y) -> (-y, x).
constexpr Vec2 rot90(const Vec2 &a) { return {-a.y, a.x}; }
/// Rotation by -90 degrees: (x, y) -> (y, -x).
constexpr Vec2 rot270(const Vec2 &a) { return {a.y, -a.x}; }

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    static constexpr Sym2 identity() { return {1.0, 0.0, 1.0}; }
    static constexpr Sym2 scalar(double a) { return {a, 0.0, a}; }

    constexpr double det() const { return xx * yy - xy * xy; }
    constexpr double trace() const { return xx + yy; }

    constexpr Vec2 operator*(const Vec2 &v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

    Sym2 inverse() const {
        const double d = det();
        if (!(d > 0.0)) throw std::domain_error("Sym2::inverse: matrix is not positive definite");
        return {yy / d, -xy / d, xx / d};
    }

    /// Quadratic form a^T M b.
    constexpr double form(const Vec2 &a, const Vec2 &b) const { return dot(a, (*this) * b); }

    /// Closed-form eigenvalues, ascending.
    std::array<double, 2> eigenvalues() const {
        const double mean = 0.5 * (xx + yy);
        const double rad = std::hypot(0.5 * (xx - yy), xy);
        return {mean - rad, mean + rad};
    }
    double lambda_min() const { return eigenvalues()[0]; }
    double lambda_max() const { return eigenvalues()[1]; }

    constexpr bool is_scalar() const { return xy == 0.0 && xx == yy; }
};

constexpr Sym2 operator*(double s, const Sym2 &m) { return {s * m.xx, s * m.xy, s * m.yy}; }

inline bool is_spd(const Sym2 &m) {
    return std::isfinite(m.xx) && std::isfinite(m.xy) && std::isfinite(m.yy) && m.xx > 0.0 && m.det() > 0.0;
}

/// Q M Q^T for the rotation Q by angle theta.
inline Sym2 rotated(const Sym2 &m, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    // Q = [[c, -s], [s, c]]
    const double a = c * m.xx - s * m.xy, b = c * m.xy - s * m.yy;  // first row of Q M
    const double d = s * m.xx + c * m.xy, e = s * m.xy + c * m.yy;  // second row of Q M
    return {a * c - b * s, a * s + b * c, d * s + e * c};
}

inline Vec2 rotated(const Vec2 &v, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Signed area of the triangle (a, b, c); positive for counter-clockwise order.
constexpr double signed_area(const Vec2 &a, const Vec2 &b, const Vec2 &c) { return 0.5 * cross(b - a, c - a); }

/// Barycentric coordinates of p with respect to (a, b, c).
inline std::array<double, 3> barycentric(const Vec2 &a, const Vec2 &b, const Vec2 &c, const Vec2 &p) {
    const double area = signed_area(a, b, c);
    const double l0 = signed_area(p, b, c) / area;
    const double l1 = signed_area(a, p, c) / area;
    return {l0, l1, 1.0 - l0 - l1};
}

}  // namespace fluxzz
