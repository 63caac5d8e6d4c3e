#pragma once

#include "csv.hpp"
#include "distributions.hpp"
#include "generators.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "regression.hpp"
#include "rng.hpp"
#include "simulation.hpp"
#include "version.hpp"
