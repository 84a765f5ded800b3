#pragma once

#include "sontagdde/clkf.hpp"
#include "sontagdde/config.hpp"
#include "sontagdde/controller.hpp"
#include "sontagdde/csv.hpp"
#include "sontagdde/disturbance.hpp"
#include "sontagdde/dsl.hpp"
#include "sontagdde/errors.hpp"
#include "sontagdde/experiments.hpp"
#include "sontagdde/expr.hpp"
#include "sontagdde/history.hpp"
#include "sontagdde/hypothesis.hpp"
#include "sontagdde/model.hpp"
#include "sontagdde/selftest.hpp"
#include "sontagdde/simulate.hpp"
