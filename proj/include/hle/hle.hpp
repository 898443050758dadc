#pragma once

#include "alignment.hpp"
#include "coefficients_io.hpp"
#include "errors.hpp"
#include "lifetable.hpp"
#include "multistate.hpp"
#include "normal.hpp"
#include "probit.hpp"
#include "simcheck.hpp"
#include "sullivan.hpp"
