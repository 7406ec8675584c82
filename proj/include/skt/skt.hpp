#pragma once

#include "common.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "dual.hpp"
#include "exponents.hpp"
#include "forward.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "quadrature.hpp"
#include "report.hpp"
#include "scenario.hpp"
#include "verify.hpp"
