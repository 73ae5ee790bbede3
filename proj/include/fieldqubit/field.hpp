#pragma once

#include "fieldqubit/field/esr.hpp"
#include "fieldqubit/field/gap.hpp"
