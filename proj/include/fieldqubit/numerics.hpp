#pragma once

#include "fieldqubit/numerics/eigh.hpp"
#include "fieldqubit/numerics/least_squares.hpp"
#include "fieldqubit/numerics/linear_ode.hpp"
#include "fieldqubit/numerics/psd.hpp"
#include "fieldqubit/numerics/random.hpp"
