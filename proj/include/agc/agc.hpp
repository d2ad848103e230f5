#pragma once

#include "agc/baseline_controllers.hpp"
#include "agc/controller.hpp"
#include "agc/dqn_agent.hpp"
#include "agc/error.hpp"
#include "agc/experiment.hpp"
#include "agc/fdia.hpp"
#include "agc/harness.hpp"
#include "agc/lfc_dynamics.hpp"
#include "agc/linear_algebra.hpp"
#include "agc/scenario.hpp"
#include "agc/training.hpp"
#include "agc/tuning.hpp"
