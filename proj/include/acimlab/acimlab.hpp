#pragma once

#include "acimlab/config.hpp"
#include "acimlab/density.hpp"
#include "acimlab/error.hpp"
#include "acimlab/io.hpp"
#include "acimlab/maps.hpp"
#include "acimlab/orbits.hpp"
#include "acimlab/probability.hpp"
#include "acimlab/quadrature.hpp"
#include "acimlab/random_system.hpp"
#include "acimlab/rng.hpp"
#include "acimlab/skew.hpp"
#include "acimlab/stability.hpp"
#include "acimlab/transfer.hpp"

namespace acimlab {
inline constexpr const char* kVersion = "0.1.0";
}
