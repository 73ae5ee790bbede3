#pragma once

#include "fieldqubit/circuit/energies.hpp"
#include "fieldqubit/circuit/gradiometer.hpp"
#include "fieldqubit/circuit/hamiltonian.hpp"
#include "fieldqubit/circuit/spectrum.hpp"
