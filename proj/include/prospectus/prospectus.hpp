#pragma once

// Umbrella header.

#include "prospectus/error.hpp"
#include "prospectus/numeric.hpp"
#include "prospectus/prospect.hpp"
#include "prospectus/choice.hpp"
#include "prospectus/cpt.hpp"
#include "prospectus/experiments.hpp"
#include "prospectus/optimize.hpp"
#include "prospectus/estimation.hpp"
#include "prospectus/detectors.hpp"
#include "prospectus/simulate.hpp"
#include "prospectus/io.hpp"
#include "prospectus/config.hpp"
