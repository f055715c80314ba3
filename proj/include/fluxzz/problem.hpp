#pragma once

#include "fluxzz/geometry.hpp"
#include "fluxzz/mesh.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxzz {

/// Raised for numerical failures (solver breakdown, singular local systems).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ScalarField = std::function<double(const Vec2 &)>;
using VectorField = std::function<Vec2(const Vec2 &)>;

/// g_N evaluated at an edge midpoint with the outward unit normal; treated as
/// constant on each Neumann edge.
using NeumannData = std::function<double(const Vec2 &midpoint, const Vec2 &normal)>;

struct BoundaryData {
    ScalarField dirichlet = [](const Vec2 &) { return 0.0; };
    NeumannData neumann = [](const Vec2 &, const Vec2 &) { return 0.0; };
};

struct ExactSolution {
    ScalarField value;
    VectorField gradient;
    /// Points where the gradient is singular; they must be mesh vertices to get graded quadrature.
    std::vector<Vec2> singular_points;
};

struct ProblemSpec {
    std::string name;
    Mesh mesh;
    std::map<int, Sym2> coefficients;
    BoundaryData boundary;
    ScalarField source = [](const Vec2 &) { return 0.0; };
    std::optional<ExactSolution> exact;
    /// Optional admissibility check for meshes the problem is solved on (throws MeshError).
    std::function<void(const Mesh &)> validate_mesh;
};

}  // namespace fluxzz
