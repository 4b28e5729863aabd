#pragma once

#include "errors.hpp"
#include "quadrature.hpp"
#include "scattering.hpp"
#include "thermal_rates.hpp"
#include "pauli.hpp"
#include "thermo.hpp"
#include "model_3qd.hpp"
