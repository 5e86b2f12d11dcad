#pragma once
// Umbrella header for the engine (no HTTP dependency).

#include "gt/bounds.hpp"
#include "gt/core_model.hpp"
#include "gt/design.hpp"
#include "gt/error.hpp"
#include "gt/sim.hpp"
