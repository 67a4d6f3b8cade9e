#pragma once

// Umbrella header.

#include "oms/config.hpp"
#include "oms/data.hpp"
#include "oms/experiment.hpp"
#include "oms/hypotheses.hpp"
#include "oms/learners.hpp"
#include "oms/log.hpp"
#include "oms/metrics.hpp"
#include "oms/mirror.hpp"
#include "oms/protocol.hpp"
#include "oms/regret.hpp"
#include "oms/rng.hpp"
#include "oms/schedules.hpp"
#include "oms/selection.hpp"
#include "oms/stream.hpp"
#include "oms/wire.hpp"
