#pragma once

// Umbrella header.

#include "fluxzz/adaptivity.hpp"
#include "fluxzz/basis.hpp"
#include "fluxzz/estimators.hpp"
#include "fluxzz/fem.hpp"
#include "fluxzz/format.hpp"
#include "fluxzz/geometry.hpp"
#include "fluxzz/mesh.hpp"
#include "fluxzz/mesh_io.hpp"
#include "fluxzz/problem.hpp"
#include "fluxzz/problems.hpp"
#include "fluxzz/quadrature.hpp"
#include "fluxzz/recovery.hpp"
#include "fluxzz/refine.hpp"
#include "fluxzz/report.hpp"
#include "fluxzz/verify.hpp"
