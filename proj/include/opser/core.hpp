#pragma once

// Umbrella header for the OPSER simulator library.

#include "opser/analysis.hpp"
#include "opser/energy.hpp"
#include "opser/event_queue.hpp"
#include "opser/fuzzy.hpp"
#include "opser/mac.hpp"
#include "opser/metrics.hpp"
#include "opser/node.hpp"
#include "opser/packet.hpp"
#include "opser/radio.hpp"
#include "opser/rng.hpp"
#include "opser/scenario.hpp"
#include "opser/simulation.hpp"
#include "opser/sweep.hpp"
#include "opser/trace.hpp"
#include "opser/trust.hpp"
#include "opser/types.hpp"
#include "opser/validate.hpp"
