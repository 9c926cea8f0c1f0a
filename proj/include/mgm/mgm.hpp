#pragma once

#include "mgm/construction.hpp"
#include "mgm/cost.hpp"
#include "mgm/errors.hpp"
#include "mgm/gm_solver.hpp"
#include "mgm/io.hpp"
#include "mgm/lap.hpp"
#include "mgm/local_search.hpp"
#include "mgm/parallel.hpp"
#include "mgm/pipeline.hpp"
#include "mgm/problem.hpp"
#include "mgm/qpbo.hpp"
#include "mgm/reduction.hpp"
#include "mgm/solution.hpp"
#include "mgm/synchronization.hpp"
