#pragma once

#include "lptr/errors.hpp"
#include "lptr/grid.hpp"
#include "lptr/regularizer.hpp"
#include "lptr/smooth_model.hpp"
#include "lptr/pde_problems.hpp"
#include "lptr/gcp.hpp"
#include "lptr/subsolvers.hpp"
#include "lptr/tr_driver.hpp"
#include "lptr/baselines.hpp"
#include "lptr/report.hpp"
#include "lptr/bench.hpp"
