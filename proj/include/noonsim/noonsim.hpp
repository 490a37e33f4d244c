#pragma once

#include "noonsim/basis.hpp"
#include "noonsim/config.hpp"
#include "noonsim/core.hpp"
#include "noonsim/dynamics.hpp"
#include "noonsim/fidelity.hpp"
#include "noonsim/integrator.hpp"
#include "noonsim/io.hpp"
#include "noonsim/model.hpp"
#include "noonsim/sweep.hpp"
#include "noonsim/trajectories.hpp"
