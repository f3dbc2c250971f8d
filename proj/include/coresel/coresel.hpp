#pragma once

#include "coresel/analysis.hpp"
#include "coresel/error.hpp"
#include "coresel/geometry.hpp"
#include "coresel/io.hpp"
#include "coresel/parallel.hpp"
#include "coresel/scoring.hpp"
#include "coresel/selectors.hpp"
#include "coresel/synth.hpp"
#include "coresel/types.hpp"
#include "coresel/version.hpp"
