#pragma once

#include "mcca/assignment.hpp"
#include "mcca/auction/bids.hpp"
#include "mcca/auction/brute_force.hpp"
#include "mcca/auction/channel_bids.hpp"
#include "mcca/auction/rca.hpp"
#include "mcca/auction/wdp.hpp"
#include "mcca/bitmask.hpp"
#include "mcca/connectivity.hpp"
#include "mcca/harness/experiment.hpp"
#include "mcca/harness/stats.hpp"
#include "mcca/io.hpp"
#include "mcca/link_model.hpp"
#include "mcca/matching.hpp"
#include "mcca/pipeline.hpp"
#include "mcca/prealloc.hpp"
#include "mcca/rng.hpp"
#include "mcca/scenario.hpp"
