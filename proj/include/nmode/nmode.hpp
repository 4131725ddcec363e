#pragma once

#include "nmode/errors.hpp"
#include "nmode/params.hpp"
#include "nmode/lattice_model.hpp"
#include "nmode/dynamics.hpp"
#include "nmode/solution_types.hpp"
#include "nmode/stationary.hpp"
#include "nmode/continuation.hpp"
#include "nmode/census.hpp"
#include "nmode/tridiagonal.hpp"
#include "nmode/linear1d.hpp"
#include "nmode/io.hpp"
#include "nmode/config.hpp"
