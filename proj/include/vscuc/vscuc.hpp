#ifndef VSCUC_VSCUC_HPP
#define VSCUC_VSCUC_HPP

// Umbrella header: case model, impedance analysis, surrogate, scenario trees,
// MISOCP formulation and solver, evaluation and the experiment drivers.

#include "vscuc/common.hpp"
#include "vscuc/grid_case.hpp"
#include "vscuc/admittance.hpp"
#include "vscuc/surrogate.hpp"
#include "vscuc/scenario.hpp"
#include "vscuc/conic_program.hpp"
#include "vscuc/ipm.hpp"
#include "vscuc/solver.hpp"
#include "vscuc/formulation.hpp"
#include "vscuc/evaluate.hpp"
#include "vscuc/experiments.hpp"

#endif // VSCUC_VSCUC_HPP
