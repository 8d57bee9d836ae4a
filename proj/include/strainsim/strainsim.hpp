#pragma once

#include "strainsim/adversary.hpp"
#include "strainsim/buildchain.hpp"
#include "strainsim/bytes.hpp"
#include "strainsim/device.hpp"
#include "strainsim/engine.hpp"
#include "strainsim/error.hpp"
#include "strainsim/hash.hpp"
#include "strainsim/metrics.hpp"
#include "strainsim/model.hpp"
#include "strainsim/mutation.hpp"
#include "strainsim/netmodel.hpp"
#include "strainsim/presets.hpp"
#include "strainsim/rng.hpp"
#include "strainsim/scenario.hpp"
#include "strainsim/trace.hpp"
