#pragma once

#include "fieldqubit/cli/config.hpp"
#include "fieldqubit/cli/driver.hpp"
#include "fieldqubit/cli/generate.hpp"
#include "fieldqubit/cli/tasks.hpp"
