#pragma once

#include "fieldqubit/noise/decay_curve.hpp"
#include "fieldqubit/noise/echo.hpp"
#include "fieldqubit/noise/ramsey.hpp"
#include "fieldqubit/noise/spin_freeze.hpp"
#include "fieldqubit/noise/telegraph.hpp"
