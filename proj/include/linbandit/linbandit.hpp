#pragma once

// Umbrella header for the linear bandit laboratory.

#include "conc.hpp"
#include "design.hpp"
#include "env.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "instances.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "policies.hpp"
#include "rng.hpp"
