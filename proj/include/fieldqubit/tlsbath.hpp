#pragma once

#include "fieldqubit/tlsbath/fit.hpp"
#include "fieldqubit/tlsbath/ladder.hpp"
#include "fieldqubit/tlsbath/protocol.hpp"
