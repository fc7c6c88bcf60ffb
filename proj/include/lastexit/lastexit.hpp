#pragma once

#include "lastexit/error.hpp"
#include "lastexit/rng.hpp"
#include "lastexit/grid.hpp"
#include "lastexit/stats.hpp"
#include "lastexit/gp_sim.hpp"
#include "lastexit/limit_laws.hpp"
#include "lastexit/last_time.hpp"
#include "lastexit/survival.hpp"
#include "lastexit/saa.hpp"
#include "lastexit/estimators.hpp"
#include "lastexit/version.hpp"
