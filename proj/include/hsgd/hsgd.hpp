#pragma once

#include "hsgd/core.hpp"
#include "hsgd/dataset.hpp"
#include "hsgd/estimator.hpp"
#include "hsgd/estimator_oracles.hpp"
#include "hsgd/experiment.hpp"
#include "hsgd/losses.hpp"
#include "hsgd/problem.hpp"
#include "hsgd/regularizer.hpp"
#include "hsgd/rng.hpp"
#include "hsgd/schedules.hpp"
#include "hsgd/solvers.hpp"
#include "hsgd/synthetic.hpp"
#include "hsgd/trace.hpp"
#include "hsgd/version.hpp"
