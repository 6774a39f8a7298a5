#pragma once

// Umbrella header for the lifted matrix-completion library.

#include "liftmc/baselines.hpp"
#include "liftmc/core.hpp"
#include "liftmc/experiments.hpp"
#include "liftmc/flops.hpp"
#include "liftmc/instance.hpp"
#include "liftmc/lifted.hpp"
#include "liftmc/matrix_market.hpp"
#include "liftmc/observation.hpp"
#include "liftmc/procrustes.hpp"
#include "liftmc/rng.hpp"
#include "liftmc/solver.hpp"
#include "liftmc/svd.hpp"
