#pragma once

// Umbrella header for the regularised k-means toolkit.

#include "rkm/baseline.hpp"
#include "rkm/certificate.hpp"
#include "rkm/clique_reduction.hpp"
#include "rkm/core.hpp"
#include "rkm/io.hpp"
#include "rkm/relax.hpp"
#include "rkm/rounding.hpp"
#include "rkm/sweep.hpp"
#include "rkm/synth.hpp"
