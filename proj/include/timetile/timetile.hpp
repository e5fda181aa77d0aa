#pragma once

#include "timetile/cloog.hpp"
#include "timetile/codegen.hpp"
#include "timetile/error.hpp"
#include "timetile/int_math.hpp"
#include "timetile/legality.hpp"
#include "timetile/oracle.hpp"
#include "timetile/perf_model.hpp"
#include "timetile/polyhedron.hpp"
#include "timetile/schedule.hpp"
#include "timetile/stencil.hpp"
#include "timetile/transform.hpp"
