#pragma once

// Umbrella header.

#include "rpf/errors.hpp"
#include "rpf/dynamics.hpp"
#include "rpf/grid.hpp"
#include "rpf/hyperbolic.hpp"
#include "rpf/potential.hpp"
#include "rpf/transfer.hpp"
#include "rpf/cone.hpp"
#include "rpf/spectral.hpp"
#include "rpf/parallel.hpp"
#include "rpf/statistics.hpp"
#include "rpf/analyticity.hpp"
#include "rpf/skew.hpp"
#include "rpf/config.hpp"
