#pragma once

#include "biogate/analysis.hpp"
#include "biogate/common.hpp"
#include "biogate/device.hpp"
#include "biogate/dsl.hpp"
#include "biogate/engine.hpp"
#include "biogate/network.hpp"
#include "biogate/scenarios.hpp"
#include "biogate/units.hpp"
