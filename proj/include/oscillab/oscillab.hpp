#pragma once

#include "oscillab/errors.hpp"
#include "oscillab/core_space.hpp"
#include "oscillab/invariants.hpp"
#include "oscillab/observables.hpp"
#include "oscillab/poisson.hpp"
#include "oscillab/flows.hpp"
#include "oscillab/classify.hpp"
