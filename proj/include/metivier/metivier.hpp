#pragma once

#include "metivier/error.hpp"
#include "metivier/field_io.hpp"
#include "metivier/group_algebra.hpp"
#include "metivier/injectivity.hpp"
#include "metivier/parallel.hpp"
#include "metivier/polar_grid.hpp"
#include "metivier/quadrature.hpp"
#include "metivier/special_functions.hpp"
#include "metivier/twisted_transforms.hpp"
