#pragma once

// Umbrella header for the barycentric optimal transport library.

#include "barytrans/duality.hpp"
#include "barytrans/gaussian.hpp"
#include "barytrans/geodesic.hpp"
#include "barytrans/max_affine.hpp"
#include "barytrans/measures.hpp"
#include "barytrans/numerics/eig.hpp"
#include "barytrans/numerics/lp.hpp"
#include "barytrans/numerics/rng.hpp"
#include "barytrans/numerics/transport_lmo.hpp"
#include "barytrans/paving.hpp"
#include "barytrans/wotsolver.hpp"
