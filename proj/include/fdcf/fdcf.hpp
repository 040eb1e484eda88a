#pragma once
/// Umbrella header for the full-duplex cell-free beamforming simulator.

#include "fdcf/numerics.hpp"
#include "fdcf/config.hpp"
#include "fdcf/channel.hpp"
#include "fdcf/metrics.hpp"
#include "fdcf/perfect_csi.hpp"
#include "fdcf/ota.hpp"
#include "fdcf/baselines.hpp"
#include "fdcf/experiment.hpp"
#include "fdcf/validation.hpp"
