#pragma once

#include "gsplit/errors.hpp"
#include "gsplit/random.hpp"
#include "gsplit/normal.hpp"
#include "gsplit/state.hpp"
#include "gsplit/model.hpp"
#include "gsplit/parallel.hpp"
#include "gsplit/kernels.hpp"
#include "gsplit/predicates.hpp"
#include "gsplit/splitting.hpp"
#include "gsplit/toy_normal.hpp"
#include "gsplit/diagnostics.hpp"
#include "gsplit/estimators.hpp"
#include "gsplit/pilot.hpp"
#include "gsplit/smc.hpp"
#include "gsplit/lasso.hpp"
#include "gsplit/io.hpp"
#include "gsplit/app.hpp"
