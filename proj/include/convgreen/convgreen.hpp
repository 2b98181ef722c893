#pragma once

// Umbrella header: analysis of one-step convolution schemes L = Q1^{-1} Q0
// on the integer lattice --- operator symbols, admissibility checks, the
// spatial and temporal Green's functions by two independent routes each,
// and generalized-Gaussian envelope certification.

#include "assumptions.hpp"
#include "cli.hpp"
#include "errors.hpp"
#include "green_profile.hpp"
#include "operators.hpp"
#include "schemes.hpp"
#include "spatial.hpp"
#include "spectral.hpp"
#include "temporal.hpp"
#include "version.hpp"
