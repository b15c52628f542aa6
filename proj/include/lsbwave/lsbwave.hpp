#pragma once

#include "lsbwave/assembly.hpp"
#include "lsbwave/errors.hpp"
#include "lsbwave/general_transform.hpp"
#include "lsbwave/integrator.hpp"
#include "lsbwave/invariants.hpp"
#include "lsbwave/linalg.hpp"
#include "lsbwave/lsb.hpp"
#include "lsbwave/oracle.hpp"
#include "lsbwave/potential.hpp"
#include "lsbwave/solver.hpp"
