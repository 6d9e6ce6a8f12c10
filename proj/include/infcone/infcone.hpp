#pragma once

#include "infcone/extended_real.hpp"
#include "infcone/vec.hpp"
#include "infcone/lp.hpp"
#include "infcone/linalg.hpp"
#include "infcone/poly_cone.hpp"
#include "infcone/poly_set.hpp"
#include "infcone/expression.hpp"
#include "infcone/function.hpp"
#include "infcone/ladder.hpp"
#include "infcone/estimators.hpp"
#include "infcone/cones.hpp"
#include "infcone/subdiff.hpp"
#include "infcone/optimality.hpp"
#include "infcone/json_io.hpp"
#include "infcone/report.hpp"
