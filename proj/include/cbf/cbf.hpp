#pragma once

#include "cbf/errors.hpp"
#include "cbf/fields.hpp"
#include "cbf/spectral.hpp"
#include "cbf/direct_solver.hpp"
#include "cbf/inverse_solver.hpp"
#include "cbf/estimates.hpp"
#include "cbf/manufactured.hpp"
#include "cbf/io.hpp"
