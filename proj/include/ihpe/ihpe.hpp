#pragma once

#include "ihpe/errors.hpp"
#include "ihpe/linalg.hpp"
#include "ihpe/params.hpp"
#include "ihpe/operators.hpp"
#include "ihpe/problems.hpp"
#include "ihpe/ergodic.hpp"
#include "ihpe/hpe.hpp"
#include "ihpe/laws.hpp"
#include "ihpe/instances.hpp"
#include "ihpe/bounds.hpp"
#include "ihpe/config.hpp"
#include "ihpe/trace_io.hpp"
#include "ihpe/experiment.hpp"
