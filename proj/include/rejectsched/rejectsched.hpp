#pragma once

#include "rejectsched/types.hpp"
#include "rejectsched/piecewise.hpp"
#include "rejectsched/random.hpp"
#include "rejectsched/instance_io.hpp"
#include "rejectsched/flowtime.hpp"
#include "rejectsched/flow_energy.hpp"
#include "rejectsched/energy_min.hpp"
#include "rejectsched/verify.hpp"
#include "rejectsched/oracle.hpp"
