#pragma once

// Umbrella header.
#include "sqhardnet/activation.hpp"
#include "sqhardnet/analysis.hpp"
#include "sqhardnet/csv.hpp"
#include "sqhardnet/distributions.hpp"
#include "sqhardnet/family.hpp"
#include "sqhardnet/hermite.hpp"
#include "sqhardnet/mlp.hpp"
#include "sqhardnet/montecarlo.hpp"
#include "sqhardnet/parallel.hpp"
#include "sqhardnet/quadrature.hpp"
#include "sqhardnet/report.hpp"
#include "sqhardnet/rng.hpp"
#include "sqhardnet/sqgame.hpp"
#include "sqhardnet/svg.hpp"
#include "sqhardnet/training.hpp"
