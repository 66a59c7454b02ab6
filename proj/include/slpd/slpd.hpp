// umbrella header

#pragma once

#include "slpd/block.hpp"
#include "slpd/dynamics.hpp"
#include "slpd/errors.hpp"
#include "slpd/exact_solver.hpp"
#include "slpd/hypergeometric.hpp"
#include "slpd/meanfield.hpp"
#include "slpd/structure_function.hpp"
#include "slpd/three_boson.hpp"
#include "slpd/variational.hpp"
