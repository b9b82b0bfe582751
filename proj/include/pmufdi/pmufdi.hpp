#pragma once

#include "pmufdi/error.hpp"
#include "pmufdi/types.hpp"

#include "pmufdi/grid/admittance.hpp"
#include "pmufdi/grid/attack_sets.hpp"
#include "pmufdi/grid/case.hpp"
#include "pmufdi/grid/measurement.hpp"
#include "pmufdi/grid/plans.hpp"

#include "pmufdi/lowrank/kernels.hpp"
#include "pmufdi/lowrank/subspace.hpp"

#include "pmufdi/scenario/block.hpp"
#include "pmufdi/scenario/block_io.hpp"
#include "pmufdi/scenario/loads.hpp"
#include "pmufdi/scenario/power_flow.hpp"

#include "pmufdi/attack/designer.hpp"
#include "pmufdi/attack/naive.hpp"

#include "pmufdi/detect/ld_detector.hpp"

#include "pmufdi/experiment/config.hpp"
#include "pmufdi/experiment/inputs.hpp"
#include "pmufdi/experiment/parallel.hpp"
#include "pmufdi/experiment/report.hpp"
#include "pmufdi/experiment/runner.hpp"
#include "pmufdi/experiment/sweep.hpp"
