#pragma once

#include "replisim/accounting.hpp"
#include "replisim/agent.hpp"
#include "replisim/dqn.hpp"
#include "replisim/dynamics.hpp"
#include "replisim/experiment.hpp"
#include "replisim/platform.hpp"
#include "replisim/policy.hpp"
#include "replisim/qnetwork.hpp"
#include "replisim/replication.hpp"
#include "replisim/report.hpp"
#include "replisim/rng.hpp"
#include "replisim/scenario.hpp"
#include "replisim/simulation.hpp"
#include "replisim/state.hpp"
#include "replisim/workload.hpp"
