// Umbrella header.
#pragma once

#include "lmtp/common.hpp"
#include "lmtp/config.hpp"
#include "lmtp/density_ratio.hpp"
#include "lmtp/design.hpp"
#include "lmtp/estimators.hpp"
#include "lmtp/learners.hpp"
#include "lmtp/panel.hpp"
#include "lmtp/policy.hpp"
#include "lmtp/report.hpp"
#include "lmtp/rng.hpp"
#include "lmtp/simulation.hpp"
