#pragma once

// Umbrella header: fractional Mettu-Plaxton facility location with the LMP
// guarantee under distance distortions, lambda-sweep fractional
// (k,z)-clustering, cost estimation, ruling-set rounding to an integral
// center set, a bulk-synchronous MPC simulator, and desk-scale oracles.

#include "mpclust/assignment.hpp"
#include "mpclust/dataset.hpp"
#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/fractional.hpp"
#include "mpclust/json_io.hpp"
#include "mpclust/mp_facility.hpp"
#include "mpclust/mpc.hpp"
#include "mpclust/mpc_solve.hpp"
#include "mpclust/oracles.hpp"
#include "mpclust/preprocess.hpp"
#include "mpclust/primitives.hpp"
#include "mpclust/reduce.hpp"
#include "mpclust/rng.hpp"
#include "mpclust/rounding.hpp"
#include "mpclust/simplex.hpp"
