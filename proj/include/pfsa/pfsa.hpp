#pragma once

// Umbrella header for the PFSA deletion-channel toolkit.

#include "pfsa/channel.hpp"
#include "pfsa/codec.hpp"
#include "pfsa/design.hpp"
#include "pfsa/experiments.hpp"
#include "pfsa/m2.hpp"
#include "pfsa/machine.hpp"
#include "pfsa/matrix.hpp"
#include "pfsa/metrics.hpp"
#include "pfsa/numeric.hpp"
#include "pfsa/rng.hpp"
#include "pfsa/serialization.hpp"
#include "pfsa/tamper.hpp"
