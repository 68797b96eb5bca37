#pragma once

#include "chemostat/analysis.hpp"
#include "chemostat/equilibria.hpp"
#include "chemostat/errors.hpp"
#include "chemostat/integrator.hpp"
#include "chemostat/io.hpp"
#include "chemostat/model.hpp"
#include "chemostat/random.hpp"
#include "chemostat/spectral.hpp"
#include "chemostat/stability.hpp"
#include "chemostat/verify.hpp"
